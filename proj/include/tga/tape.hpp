#pragma once

#include <cstdint>
#include <vector>

#include "tga/matrix.hpp"

namespace tga::ad {

enum class Op : std::uint8_t {
    Leaf,
    MatMul,
    Add,
    Sub,
    Hadamard,
    Sigmoid,
    Tanh,
    Relu,
    Transpose,
    ConcatRows,
    SliceRow,
    SumSquares,
    WeightedSumSquares,
    Scale,
    L2Norm,
};

const char* op_name(Op op);

// Handle into a Tape. Shape is cached so callers can wire graphs without
// round-tripping through the tape.
struct Value {
    int id = -1;
    std::size_t rows = 0;
    std::size_t cols = 0;
    bool valid() const { return id >= 0; }
};

// Record of primitive operations in topological order (inputs always precede
// uses). Forward values are computed eagerly at recording time; backward()
// replays the records in exact reverse order.
//
// A tape is single-owner while being built; distinct tapes are independent.
class Tape {
public:
    // Leaves reject non-finite data. Only requires_grad leaves receive
    // gradients; gradient flow through constant subgraphs is skipped.
    Value leaf(Matrix m, bool requires_grad = false);

    Value matmul(Value a, Value b);
    Value add(Value a, Value b);
    Value sub(Value a, Value b);
    Value hadamard(Value a, Value b);
    Value sigmoid(Value x);
    Value tanh(Value x);
    // relu'(0) is defined as 0.
    Value relu(Value x);
    Value transpose(Value x);
    Value concat_rows(const std::vector<Value>& xs);
    Value slice_row(Value x, std::size_t row);
    Value sum_squares(Value x);
    // weights are fixed coefficients, same shape as x: sum_ij w_ij * x_ij^2.
    Value weighted_sum_squares(Value x, Matrix weights);
    Value scale(Value x, double s);
    // Euclidean norm; subgradient at the origin is 0.
    Value l2_norm(Value x);

    const Matrix& value(Value v) const;

    // Reverse-mode sweep from a scalar root. Gradients of earlier backward
    // calls are discarded. Contributions to a node used k times accumulate.
    void backward(Value root);

    // Gradient of the last backward root w.r.t. v (zeros if v is a
    // requires_grad leaf the root does not depend on).
    const Matrix& grad(Value v) const;

    // d(root)/d(input) for designated requires_grad leaves, in one sweep.
    std::vector<Matrix> gradient_of_input(Value root, const std::vector<Value>& inputs);

    std::size_t size() const { return nodes_.size(); }

private:
    struct Node {
        Op op = Op::Leaf;
        Matrix val;
        Matrix grad;
        int in0 = -1;
        int in1 = -1;
        std::vector<int> in_list; // ConcatRows
        std::size_t index = 0;    // SliceRow
        double coeff = 0.0;       // Scale
        Matrix aux;               // WeightedSumSquares coefficients
        bool requires_grad = false;
        bool grad_ready = false;
    };

    Value push(Node n);
    const Node& node(Value v) const;
    Node& node_mut(Value v);
    static void check_valid(Value v, const char* op);

    std::vector<Node> nodes_;
};

} // namespace tga::ad
