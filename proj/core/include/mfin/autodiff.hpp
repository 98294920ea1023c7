#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mfin/rng.hpp"

namespace mfin::ad {

// Dense float64 tensor, up to 4 axes, row-major.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<int> shape_in, double fill = 0.0);
    static Tensor scalar(double v);
    static Tensor matrix(int rows, int cols, double fill = 0.0);

    int ndim() const { return static_cast<int>(shape.size()); }
    int dim(int i) const { return shape[i]; }
    std::int64_t numel() const { return static_cast<std::int64_t>(v.size()); }
    int rows() const { return shape[0]; }
    int cols() const { return shape[1]; }

    double& at2(int r, int c) { return v[static_cast<std::size_t>(r) * shape[1] + c]; }
    double at2(int r, int c) const { return v[static_cast<std::size_t>(r) * shape[1] + c]; }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }

    std::vector<int> shape;
    std::vector<double> v;
};

using NodeId = int;

// Eagerly-evaluated computation tape. Ops compute values at creation and
// record a backward closure; backward() walks the tape in reverse creation
// order, which is a valid reverse topological order by construction.
class Graph {
public:
    NodeId input(Tensor t);               // constant leaf (no gradient interest)
    NodeId param(const Tensor& t);        // leaf whose gradient is wanted

    const Tensor& val(NodeId id) const { return nodes_[id].val; }
    const Tensor& grad(NodeId id) const { return nodes_[id].grad; }
    double scalar_val(NodeId id) const { return nodes_[id].val.v[0]; }
    int size() const { return static_cast<int>(nodes_.size()); }

    // Elementwise (same shape).
    NodeId add(NodeId a, NodeId b);
    NodeId sub(NodeId a, NodeId b);
    NodeId mul(NodeId a, NodeId b);
    NodeId divide(NodeId a, NodeId b);

    NodeId scale(NodeId a, double s);        // s * a
    NodeId add_const(NodeId a, double c);

    // Broadcast against a scalar node (numel == 1).
    NodeId sub_bcast(NodeId a, NodeId s);
    NodeId mul_bcast(NodeId a, NodeId s);
    NodeId div_bcast(NodeId a, NodeId s);

    NodeId matmul(NodeId a, NodeId b);          // (M,K)x(K,N)
    NodeId add_rowvec(NodeId a, NodeId row);    // (T,M) + (1,M)

    NodeId sigmoid(NodeId a);
    NodeId tanh_(NodeId a);
    NodeId elu(NodeId a);
    NodeId abs_(NodeId a);
    NodeId sqrt_(NodeId a);

    NodeId sum(NodeId a);        // scalar
    NodeId mean(NodeId a);       // scalar
    NodeId row_sum(NodeId a);    // (T,M) -> (T,1)

    NodeId slice_row(NodeId a, int r);             // (T,M) -> (1,M)
    NodeId slice_cols(NodeId a, int c0, int c1);   // [c0, c1)
    NodeId concat_cols(const std::vector<NodeId>& parts);
    NodeId stack_rows(const std::vector<NodeId>& rows);  // n x (1,M) -> (n,M)
    NodeId shift_rows_down(NodeId a, int k);       // zero-filled at the top
    NodeId flatten_width(NodeId a);                // (T,W,C) -> (T,W*C)

    // Causal temporal convolution: output row t reads input rows <= t only
    // (zero padding of h-1 rows at the start); valid across width.
    //   input (T,W,Cin), kernel (h,w,Cin,Cout), bias (Cout) -> (T,W-w+1,Cout)
    NodeId conv2d_causal(NodeId in, NodeId kernel, NodeId bias);

    // Inverted dropout as multiplication by a sampled constant mask; identity
    // when training is false or rate is 0.
    NodeId dropout(NodeId a, double rate, Rng& rng, bool training);

    void backward(NodeId loss);  // loss must be scalar

private:
    struct Node {
        Tensor val;
        Tensor grad;
        std::function<void(Graph&)> back;  // accumulates into parents' grads
    };

    NodeId emplace(Tensor val, std::function<void(Graph&)> back);
    Tensor& grad_ref(NodeId id) { return nodes_[id].grad; }

    std::vector<Node> nodes_;
};

// Adam with bias correction; moments allocated per parameter tensor.
struct AdamState {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::int64_t step = 0;
    std::vector<Tensor> m;
    std::vector<Tensor> v;

    void init(const std::vector<Tensor>& params);
    void update(std::vector<Tensor>& params, const std::vector<Tensor>& grads);
};

// Standard LSTM over a (T,D) sequence built from tape primitives, zero
// initial state, gate order [input, forget, cell, output]. Parameter shapes
// W (D,4H), U (H,4H), b (1,4H); parameter count 4*(H*(D+H) + H).
NodeId lstm_forward(Graph& g, NodeId input, NodeId w, NodeId u, NodeId b, int hidden);

NodeId dense(Graph& g, NodeId input, NodeId w, NodeId b);  // (T,D)x(D,M) + bias

}  // namespace mfin::ad
