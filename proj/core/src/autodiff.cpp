#include "mfin/autodiff.hpp"

#include <cmath>

#include "mfin/errors.hpp"

namespace mfin::ad {

Tensor::Tensor(std::vector<int> shape_in, double fill) : shape(std::move(shape_in)) {
    std::int64_t n = 1;
    for (int d : shape) {
        if (d <= 0) throw ConfigError("tensor dimension must be positive");
        n *= d;
    }
    if (shape.size() > 4) throw ConfigError("tensors support up to 4 axes");
    v.assign(static_cast<std::size_t>(n), fill);
}

Tensor Tensor::scalar(double x) {
    Tensor t(std::vector<int>{1});
    t.v[0] = x;
    return t;
}

Tensor Tensor::matrix(int rows, int cols, double fill) {
    return Tensor(std::vector<int>{rows, cols}, fill);
}

NodeId Graph::emplace(Tensor val, std::function<void(Graph&)> back) {
    nodes_.push_back(Node{std::move(val), Tensor{}, std::move(back)});
    return static_cast<NodeId>(nodes_.size()) - 1;
}

NodeId Graph::input(Tensor t) { return emplace(std::move(t), nullptr); }
NodeId Graph::param(const Tensor& t) { return emplace(t, nullptr); }

namespace {
void check_same(const Tensor& a, const Tensor& b, const char* op) {
    if (!a.same_shape(b)) throw ConfigError(std::string(op) + ": shape mismatch");
}
}  // namespace

NodeId Graph::add(NodeId a, NodeId b) {
    check_same(val(a), val(b), "add");
    Tensor out = val(a);
    for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] += val(b).v[i];
    const NodeId id = emplace(std::move(out), nullptr);
    nodes_[id].back = [id, a, b](Graph& g) {
        const Tensor& go = g.grad(id);
        for (std::size_t i = 0; i < go.v.size(); ++i) {
            g.grad_ref(a).v[i] += go.v[i];
            g.grad_ref(b).v[i] += go.v[i];
        }
    };
    return id;
}

NodeId Graph::sub(NodeId a, NodeId b) {
    check_same(val(a), val(b), "sub");
    Tensor out = val(a);
    for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] -= val(b).v[i];
    const NodeId id = emplace(std::move(out), nullptr);
    nodes_[id].back = [id, a, b](Graph& g) {
        const Tensor& go = g.grad(id);
        for (std::size_t i = 0; i < go.v.size(); ++i) {
            g.grad_ref(a).v[i] += go.v[i];
            g.grad_ref(b).v[i] -= go.v[i];
        }
    };
    return id;
}

NodeId Graph::mul(NodeId a, NodeId b) {
    check_same(val(a), val(b), "mul");
    Tensor out = val(a);
    for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] *= val(b).v[i];
    const NodeId id = emplace(std::move(out), nullptr);
    nodes_[id].back = [id, a, b](Graph& g) {
        const Tensor& go = g.grad(id);
        const Tensor& va = g.val(a);
        const Tensor& vb = g.val(b);
        for (std::size_t i = 0; i < go.v.size(); ++i) {
            g.grad_ref(a).v[i] += go.v[i] * vb.v[i];
            g.grad_ref(b).v[i] += go.v[i] * va.v[i];
        }
    };
    return id;
}

NodeId Graph::divide(NodeId a, NodeId b) {
    check_same(val(a), val(b), "divide");
    Tensor out = val(a);
    for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] /= val(b).v[i];
    const NodeId id = emplace(std::move(out), nullptr);
    nodes_[id].back = [id, a, b](Graph& g) {
        const Tensor& go = g.grad(id);
        const Tensor& va = g.val(a);
        const Tensor& vb = g.val(b);
        for (std::size_t i = 0; i < go.v.size(); ++i) {
            g.grad_ref(a).v[i] += go.v[i] / vb.v[i];
            g.grad_ref(b).v[i] -= go.v[i] * va.v[i] / (vb.v[i] * vb.v[i]);
        }
    };
    return id;
}

NodeId Graph::scale(NodeId a, double s) {
    Tensor out = val(a);
    for (auto& x : out.v) x *= s;
    const NodeId id = emplace(std::move(out), nullptr);
    nodes_[id].back = [id, a, s](Graph& g) {
        const Tensor& go = g.grad(id);
        for (std::size_t i = 0; i < go.v.size(); ++i) g.grad_ref(a).v[i] += go.v[i] * s;
    };
    return id;
}

NodeId Graph::add_const(NodeId a, double c) {
    Tensor out = val(a);
    for (auto& x : out.v) x += c;
    const NodeId id = emplace(std::move(out), nullptr);
    nodes_[id].back = [id, a](Graph& g) {
        const Tensor& go = g.grad(id);
        for (std::size_t i = 0; i < go.v.size(); ++i) g.grad_ref(a).v[i] += go.v[i];
    };
    return id;
}

NodeId Graph::sub_bcast(NodeId a, NodeId s) {
    if (val(s).numel() != 1) throw ConfigError("sub_bcast: scalar node required");
    Tensor out = val(a);
    const double sv = scalar_val(s);
    for (auto& x : out.v) x -= sv;
    const NodeId id = emplace(std::move(out), nullptr);
    nodes_[id].back = [id, a, s](Graph& g) {
        const Tensor& go = g.grad(id);
        double acc = 0.0;
        for (std::size_t i = 0; i < go.v.size(); ++i) {
            g.grad_ref(a).v[i] += go.v[i];
            acc += go.v[i];
        }
        g.grad_ref(s).v[0] -= acc;
    };
    return id;
}

NodeId Graph::mul_bcast(NodeId a, NodeId s) {
    if (val(s).numel() != 1) throw ConfigError("mul_bcast: scalar node required");
    Tensor out = val(a);
    const double sv = scalar_val(s);
    for (auto& x : out.v) x *= sv;
    const NodeId id = emplace(std::move(out), nullptr);
    nodes_[id].back = [id, a, s](Graph& g) {
        const Tensor& go = g.grad(id);
        const Tensor& va = g.val(a);
        const double svv = g.scalar_val(s);
        double acc = 0.0;
        for (std::size_t i = 0; i < go.v.size(); ++i) {
            g.grad_ref(a).v[i] += go.v[i] * svv;
            acc += go.v[i] * va.v[i];
        }
        g.grad_ref(s).v[0] += acc;
    };
    return id;
}

NodeId Graph::div_bcast(NodeId a, NodeId s) {
    if (val(s).numel() != 1) throw ConfigError("div_bcast: scalar node required");
    Tensor out = val(a);
    const double sv = scalar_val(s);
    for (auto& x : out.v) x /= sv;
    const NodeId id = emplace(std::move(out), nullptr);
    nodes_[id].back = [id, a, s](Graph& g) {
        const Tensor& go = g.grad(id);
        const Tensor& va = g.val(a);
        const double svv = g.scalar_val(s);
        double acc = 0.0;
        for (std::size_t i = 0; i < go.v.size(); ++i) {
            g.grad_ref(a).v[i] += go.v[i] / svv;
            acc += go.v[i] * va.v[i];
        }
        g.grad_ref(s).v[0] -= acc / (svv * svv);
    };
    return id;
}

NodeId Graph::matmul(NodeId a, NodeId b) {
    const Tensor& va = val(a);
    const Tensor& vb = val(b);
    if (va.ndim() != 2 || vb.ndim() != 2 || va.cols() != vb.rows())
        throw ConfigError("matmul: incompatible shapes");
    const int M = va.rows(), K = va.cols(), N = vb.cols();
    Tensor out = Tensor::matrix(M, N);
    for (int i = 0; i < M; ++i)
        for (int k = 0; k < K; ++k) {
            const double aik = va.at2(i, k);
            if (aik == 0.0) continue;
            for (int j = 0; j < N; ++j) out.at2(i, j) += aik * vb.at2(k, j);
        }
    const NodeId id = emplace(std::move(out), nullptr);
    nodes_[id].back = [id, a, b, M, K, N](Graph& g) {
        const Tensor& go = g.grad(id);
        const Tensor& va2 = g.val(a);
        const Tensor& vb2 = g.val(b);
        Tensor& ga = g.grad_ref(a);
        Tensor& gb = g.grad_ref(b);
        // dA = dOut * B^T ; dB = A^T * dOut
        for (int i = 0; i < M; ++i)
            for (int j = 0; j < N; ++j) {
                const double go_ij = go.at2(i, j);
                if (go_ij == 0.0) continue;
                for (int k = 0; k < K; ++k) {
                    ga.at2(i, k) += go_ij * vb2.at2(k, j);
                    gb.at2(k, j) += va2.at2(i, k) * go_ij;
                }
            }
    };
    return id;
}

NodeId Graph::add_rowvec(NodeId a, NodeId row) {
    const Tensor& va = val(a);
    const Tensor& vr = val(row);
    if (va.ndim() != 2 || vr.ndim() != 2 || vr.rows() != 1 || vr.cols() != va.cols())
        throw ConfigError("add_rowvec: shape mismatch");
    Tensor out = va;
    for (int i = 0; i < va.rows(); ++i)
        for (int j = 0; j < va.cols(); ++j) out.at2(i, j) += vr.at2(0, j);
    const NodeId id = emplace(std::move(out), nullptr);
    nodes_[id].back = [id, a, row](Graph& g) {
        const Tensor& go = g.grad(id);
        Tensor& ga = g.grad_ref(a);
        Tensor& gr = g.grad_ref(row);
        for (int i = 0; i < go.rows(); ++i)
            for (int j = 0; j < go.cols(); ++j) {
                ga.at2(i, j) += go.at2(i, j);
                gr.at2(0, j) += go.at2(i, j);
            }
    };
    return id;
}

namespace {
double sigmoid_val(double x) { return 1.0 / (1.0 + std::exp(-x)); }
}  // namespace

NodeId Graph::sigmoid(NodeId a) {
    Tensor out = val(a);
    for (auto& x : out.v) x = sigmoid_val(x);
    const NodeId id = emplace(std::move(out), nullptr);
    nodes_[id].back = [id, a](Graph& g) {
        const Tensor& go = g.grad(id);
        const Tensor& vo = g.val(id);
        for (std::size_t i = 0; i < go.v.size(); ++i)
            g.grad_ref(a).v[i] += go.v[i] * vo.v[i] * (1.0 - vo.v[i]);
    };
    return id;
}

NodeId Graph::tanh_(NodeId a) {
    Tensor out = val(a);
    for (auto& x : out.v) x = std::tanh(x);
    const NodeId id = emplace(std::move(out), nullptr);
    nodes_[id].back = [id, a](Graph& g) {
        const Tensor& go = g.grad(id);
        const Tensor& vo = g.val(id);
        for (std::size_t i = 0; i < go.v.size(); ++i)
            g.grad_ref(a).v[i] += go.v[i] * (1.0 - vo.v[i] * vo.v[i]);
    };
    return id;
}

NodeId Graph::elu(NodeId a) {
    Tensor out = val(a);
    for (auto& x : out.v) x = x > 0.0 ? x : std::expm1(x);
    const NodeId id = emplace(std::move(out), nullptr);
    nodes_[id].back = [id, a](Graph& g) {
        const Tensor& go = g.grad(id);
        const Tensor& vi = g.val(a);
        for (std::size_t i = 0; i < go.v.size(); ++i) {
            const double d = vi.v[i] > 0.0 ? 1.0 : std::exp(vi.v[i]);
            g.grad_ref(a).v[i] += go.v[i] * d;
        }
    };
    return id;
}

NodeId Graph::abs_(NodeId a) {
    Tensor out = val(a);
    for (auto& x : out.v) x = std::abs(x);
    const NodeId id = emplace(std::move(out), nullptr);
    nodes_[id].back = [id, a](Graph& g) {
        const Tensor& go = g.grad(id);
        const Tensor& vi = g.val(a);
        for (std::size_t i = 0; i < go.v.size(); ++i) {
            const double s = vi.v[i] > 0.0 ? 1.0 : (vi.v[i] < 0.0 ? -1.0 : 0.0);
            g.grad_ref(a).v[i] += go.v[i] * s;
        }
    };
    return id;
}

NodeId Graph::sqrt_(NodeId a) {
    Tensor out = val(a);
    for (auto& x : out.v) x = std::sqrt(x);
    const NodeId id = emplace(std::move(out), nullptr);
    nodes_[id].back = [id, a](Graph& g) {
        const Tensor& go = g.grad(id);
        const Tensor& vo = g.val(id);
        for (std::size_t i = 0; i < go.v.size(); ++i)
            if (vo.v[i] > 0.0) g.grad_ref(a).v[i] += go.v[i] * 0.5 / vo.v[i];
    };
    return id;
}

NodeId Graph::sum(NodeId a) {
    double s = 0.0;
    for (double x : val(a).v) s += x;
    const NodeId id = emplace(Tensor::scalar(s), nullptr);
    nodes_[id].back = [id, a](Graph& g) {
        const double go = g.grad(id).v[0];
        for (auto& x : g.grad_ref(a).v) x += go;
    };
    return id;
}

NodeId Graph::mean(NodeId a) {
    const double n = static_cast<double>(val(a).numel());
    double s = 0.0;
    for (double x : val(a).v) s += x;
    const NodeId id = emplace(Tensor::scalar(s / n), nullptr);
    nodes_[id].back = [id, a, n](Graph& g) {
        const double go = g.grad(id).v[0] / n;
        for (auto& x : g.grad_ref(a).v) x += go;
    };
    return id;
}

NodeId Graph::row_sum(NodeId a) {
    const Tensor& va = val(a);
    if (va.ndim() != 2) throw ConfigError("row_sum: 2-D input required");
    Tensor out = Tensor::matrix(va.rows(), 1);
    for (int i = 0; i < va.rows(); ++i) {
        double s = 0.0;
        for (int j = 0; j < va.cols(); ++j) s += va.at2(i, j);
        out.at2(i, 0) = s;
    }
    const NodeId id = emplace(std::move(out), nullptr);
    nodes_[id].back = [id, a](Graph& g) {
        const Tensor& go = g.grad(id);
        Tensor& ga = g.grad_ref(a);
        for (int i = 0; i < ga.rows(); ++i)
            for (int j = 0; j < ga.cols(); ++j) ga.at2(i, j) += go.at2(i, 0);
    };
    return id;
}

NodeId Graph::slice_row(NodeId a, int r) {
    const Tensor& va = val(a);
    if (va.ndim() != 2 || r < 0 || r >= va.rows()) throw ConfigError("slice_row: bad index");
    Tensor out = Tensor::matrix(1, va.cols());
    for (int j = 0; j < va.cols(); ++j) out.at2(0, j) = va.at2(r, j);
    const NodeId id = emplace(std::move(out), nullptr);
    nodes_[id].back = [id, a, r](Graph& g) {
        const Tensor& go = g.grad(id);
        Tensor& ga = g.grad_ref(a);
        for (int j = 0; j < go.cols(); ++j) ga.at2(r, j) += go.at2(0, j);
    };
    return id;
}

NodeId Graph::slice_cols(NodeId a, int c0, int c1) {
    const Tensor& va = val(a);
    if (va.ndim() != 2 || c0 < 0 || c1 > va.cols() || c0 >= c1)
        throw ConfigError("slice_cols: bad range");
    Tensor out = Tensor::matrix(va.rows(), c1 - c0);
    for (int i = 0; i < va.rows(); ++i)
        for (int j = c0; j < c1; ++j) out.at2(i, j - c0) = va.at2(i, j);
    const NodeId id = emplace(std::move(out), nullptr);
    nodes_[id].back = [id, a, c0](Graph& g) {
        const Tensor& go = g.grad(id);
        Tensor& ga = g.grad_ref(a);
        for (int i = 0; i < go.rows(); ++i)
            for (int j = 0; j < go.cols(); ++j) ga.at2(i, j + c0) += go.at2(i, j);
    };
    return id;
}

NodeId Graph::concat_cols(const std::vector<NodeId>& parts) {
    if (parts.empty()) throw ConfigError("concat_cols: empty");
    const int rows = val(parts[0]).rows();
    int cols = 0;
    for (NodeId p : parts) {
        if (val(p).ndim() != 2 || val(p).rows() != rows)
            throw ConfigError("concat_cols: row mismatch");
        cols += val(p).cols();
    }
    Tensor out = Tensor::matrix(rows, cols);
    int off = 0;
    for (NodeId p : parts) {
        const Tensor& vp = val(p);
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < vp.cols(); ++j) out.at2(i, off + j) = vp.at2(i, j);
        off += vp.cols();
    }
    const NodeId id = emplace(std::move(out), nullptr);
    std::vector<NodeId> ps = parts;
    nodes_[id].back = [id, ps](Graph& g) {
        const Tensor& go = g.grad(id);
        int off2 = 0;
        for (NodeId p : ps) {
            Tensor& gp = g.grad_ref(p);
            for (int i = 0; i < gp.rows(); ++i)
                for (int j = 0; j < gp.cols(); ++j) gp.at2(i, j) += go.at2(i, off2 + j);
            off2 += gp.cols();
        }
    };
    return id;
}

NodeId Graph::stack_rows(const std::vector<NodeId>& rows_in) {
    if (rows_in.empty()) throw ConfigError("stack_rows: empty");
    const int cols = val(rows_in[0]).cols();
    for (NodeId r : rows_in)
        if (val(r).ndim() != 2 || val(r).rows() != 1 || val(r).cols() != cols)
            throw ConfigError("stack_rows: each part must be (1,M)");
    Tensor out = Tensor::matrix(static_cast<int>(rows_in.size()), cols);
    for (std::size_t i = 0; i < rows_in.size(); ++i)
        for (int j = 0; j < cols; ++j) out.at2(static_cast<int>(i), j) = val(rows_in[i]).at2(0, j);
    const NodeId id = emplace(std::move(out), nullptr);
    std::vector<NodeId> rs = rows_in;
    nodes_[id].back = [id, rs](Graph& g) {
        const Tensor& go = g.grad(id);
        for (std::size_t i = 0; i < rs.size(); ++i) {
            Tensor& gr = g.grad_ref(rs[i]);
            for (int j = 0; j < go.cols(); ++j)
                gr.at2(0, j) += go.at2(static_cast<int>(i), j);
        }
    };
    return id;
}

NodeId Graph::shift_rows_down(NodeId a, int k) {
    const Tensor& va = val(a);
    if (va.ndim() != 2 || k < 0) throw ConfigError("shift_rows_down: bad args");
    Tensor out = Tensor::matrix(va.rows(), va.cols());
    for (int i = k; i < va.rows(); ++i)
        for (int j = 0; j < va.cols(); ++j) out.at2(i, j) = va.at2(i - k, j);
    const NodeId id = emplace(std::move(out), nullptr);
    nodes_[id].back = [id, a, k](Graph& g) {
        const Tensor& go = g.grad(id);
        Tensor& ga = g.grad_ref(a);
        for (int i = k; i < go.rows(); ++i)
            for (int j = 0; j < go.cols(); ++j) ga.at2(i - k, j) += go.at2(i, j);
    };
    return id;
}

NodeId Graph::flatten_width(NodeId a) {
    const Tensor& va = val(a);
    if (va.ndim() != 3) throw ConfigError("flatten_width: 3-D input required");
    Tensor out = Tensor::matrix(va.dim(0), va.dim(1) * va.dim(2));
    out.v = va.v;  // row-major (t, x, c) flattens in place
    const NodeId id = emplace(std::move(out), nullptr);
    nodes_[id].back = [id, a](Graph& g) {
        const Tensor& go = g.grad(id);
        Tensor& ga = g.grad_ref(a);
        for (std::size_t i = 0; i < go.v.size(); ++i) ga.v[i] += go.v[i];
    };
    return id;
}

NodeId Graph::conv2d_causal(NodeId in, NodeId kernel, NodeId bias) {
    const Tensor& vin = val(in);
    const Tensor& vk = val(kernel);
    const Tensor& vb = val(bias);
    if (vin.ndim() != 3 || vk.ndim() != 4 || vb.ndim() != 1)
        throw ConfigError("conv2d_causal: expected input (T,W,Cin), kernel (h,w,Cin,Cout), "
                          "bias (Cout)");
    const int T = vin.dim(0), W = vin.dim(1), Cin = vin.dim(2);
    const int h = vk.dim(0), w = vk.dim(1), Cout = vk.dim(3);
    if (vk.dim(2) != Cin || vb.dim(0) != Cout) throw ConfigError("conv2d_causal: shape mismatch");
    if (w > W) throw ConfigError("conv2d_causal: kernel wider than input");
    const int Wo = W - w + 1;

    auto in_at = [&](int t, int x, int c) {
        return vin.v[(static_cast<std::size_t>(t) * W + x) * Cin + c];
    };
    auto k_at = [&](int dt, int dx, int ci, int co) {
        return vk.v[((static_cast<std::size_t>(dt) * w + dx) * Cin + ci) * Cout + co];
    };

    Tensor out(std::vector<int>{T, Wo, Cout});
    for (int t = 0; t < T; ++t)
        for (int x = 0; x < Wo; ++x)
            for (int co = 0; co < Cout; ++co) {
                double s = vb.v[co];
                for (int dt = 0; dt < h && dt <= t; ++dt)
                    for (int dx = 0; dx < w; ++dx)
                        for (int ci = 0; ci < Cin; ++ci)
                            s += in_at(t - dt, x + dx, ci) * k_at(dt, dx, ci, co);
                out.v[(static_cast<std::size_t>(t) * Wo + x) * Cout + co] = s;
            }

    const NodeId id = emplace(std::move(out), nullptr);
    nodes_[id].back = [id, in, kernel, bias, T, W, Cin, h, w, Cout, Wo](Graph& g) {
        const Tensor& go = g.grad(id);
        const Tensor& vin2 = g.val(in);
        const Tensor& vk2 = g.val(kernel);
        Tensor& gin = g.grad_ref(in);
        Tensor& gk = g.grad_ref(kernel);
        Tensor& gb = g.grad_ref(bias);
        auto go_at = [&](int t, int x, int co) {
            return go.v[(static_cast<std::size_t>(t) * Wo + x) * Cout + co];
        };
        auto iidx = [&](int t, int x, int c) {
            return (static_cast<std::size_t>(t) * W + x) * Cin + c;
        };
        auto kidx = [&](int dt, int dx, int ci, int co) {
            return ((static_cast<std::size_t>(dt) * w + dx) * Cin + ci) * Cout + co;
        };
        for (int t = 0; t < T; ++t)
            for (int x = 0; x < Wo; ++x)
                for (int co = 0; co < Cout; ++co) {
                    const double gv = go_at(t, x, co);
                    if (gv == 0.0) continue;
                    gb.v[co] += gv;
                    for (int dt = 0; dt < h && dt <= t; ++dt)
                        for (int dx = 0; dx < w; ++dx)
                            for (int ci = 0; ci < Cin; ++ci) {
                                gin.v[iidx(t - dt, x + dx, ci)] +=
                                    gv * vk2.v[kidx(dt, dx, ci, co)];
                                gk.v[kidx(dt, dx, ci, co)] +=
                                    gv * vin2.v[iidx(t - dt, x + dx, ci)];
                            }
                }
    };
    return id;
}

NodeId Graph::dropout(NodeId a, double rate, Rng& rng, bool training) {
    if (!training || rate <= 0.0) return a;
    if (rate >= 1.0) throw ConfigError("dropout: rate must be below 1");
    Tensor mask = val(a);
    const double keep = 1.0 - rate;
    for (auto& x : mask.v) x = rng.uniform() < rate ? 0.0 : 1.0 / keep;
    const NodeId m = input(std::move(mask));
    return mul(a, m);
}

void Graph::backward(NodeId loss) {
    if (val(loss).numel() != 1) throw ConfigError("backward: loss must be scalar");
    for (auto& node : nodes_) {
        node.grad.shape = node.val.shape;
        node.grad.v.assign(node.val.v.size(), 0.0);
    }
    nodes_[loss].grad.v[0] = 1.0;
    for (NodeId id = static_cast<NodeId>(nodes_.size()) - 1; id >= 0; --id) {
        bool any = false;
        for (double gv : nodes_[id].grad.v)
            if (gv != 0.0) {
                any = true;
                break;
            }
        if (any && nodes_[id].back) nodes_[id].back(*this);
    }
}

void AdamState::init(const std::vector<Tensor>& params) {
    step = 0;
    m.clear();
    v.clear();
    for (const auto& p : params) {
        m.emplace_back(p.shape, 0.0);
        v.emplace_back(p.shape, 0.0);
    }
}

void AdamState::update(std::vector<Tensor>& params, const std::vector<Tensor>& grads) {
    if (m.size() != params.size()) throw ConfigError("adam: state not initialized");
    ++step;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step));
    for (std::size_t k = 0; k < params.size(); ++k) {
        auto& p = params[k].v;
        const auto& gvec = grads[k].v;
        auto& mk = m[k].v;
        auto& vk = v[k].v;
        for (std::size_t i = 0; i < p.size(); ++i) {
            mk[i] = beta1 * mk[i] + (1.0 - beta1) * gvec[i];
            vk[i] = beta2 * vk[i] + (1.0 - beta2) * gvec[i] * gvec[i];
            const double mhat = mk[i] / bc1;
            const double vhat = vk[i] / bc2;
            p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
        }
    }
}

NodeId lstm_forward(Graph& g, NodeId input, NodeId w, NodeId u, NodeId b, int hidden) {
    const Tensor& vin = g.val(input);
    if (vin.ndim() != 2) throw ConfigError("lstm: 2-D input required");
    const int T = vin.rows();
    const int H = hidden;
    if (g.val(w).rows() != vin.cols() || g.val(w).cols() != 4 * H ||
        g.val(u).rows() != H || g.val(u).cols() != 4 * H || g.val(b).cols() != 4 * H)
        throw ConfigError("lstm: parameter shape mismatch");

    std::vector<NodeId> outputs;
    outputs.reserve(T);
    NodeId h_prev = -1, c_prev = -1;
    for (int t = 0; t < T; ++t) {
        const NodeId x_t = g.slice_row(input, t);
        NodeId z = g.add_rowvec(g.matmul(x_t, w), b);
        if (t > 0) z = g.add(z, g.matmul(h_prev, u));
        const NodeId gi = g.sigmoid(g.slice_cols(z, 0, H));
        const NodeId gf = g.sigmoid(g.slice_cols(z, H, 2 * H));
        const NodeId gc = g.tanh_(g.slice_cols(z, 2 * H, 3 * H));
        const NodeId go = g.sigmoid(g.slice_cols(z, 3 * H, 4 * H));
        NodeId c_t = g.mul(gi, gc);
        if (t > 0) c_t = g.add(c_t, g.mul(gf, c_prev));
        const NodeId h_t = g.mul(go, g.tanh_(c_t));
        outputs.push_back(h_t);
        h_prev = h_t;
        c_prev = c_t;
    }
    return g.stack_rows(outputs);
}

NodeId dense(Graph& g, NodeId input, NodeId w, NodeId b) {
    return g.add_rowvec(g.matmul(input, w), b);
}

}  // namespace mfin::ad
