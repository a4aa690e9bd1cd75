#include "tga/tape.hpp"

#include <cmath>

namespace tga::ad {

const char* op_name(Op op) {
    switch (op) {
        case Op::Leaf: return "leaf";
        case Op::MatMul: return "matmul";
        case Op::Add: return "add";
        case Op::Sub: return "sub";
        case Op::Hadamard: return "hadamard";
        case Op::Sigmoid: return "sigmoid";
        case Op::Tanh: return "tanh";
        case Op::Relu: return "relu";
        case Op::Transpose: return "transpose";
        case Op::ConcatRows: return "concat_rows";
        case Op::SliceRow: return "slice_row";
        case Op::SumSquares: return "sum_squares";
        case Op::WeightedSumSquares: return "weighted_sum_squares";
        case Op::Scale: return "scale";
        case Op::L2Norm: return "l2_norm";
    }
    return "?";
}

void Tape::check_valid(Value v, const char* op) {
    if (!v.valid()) throw ContractError(std::string(op) + ": invalid value handle");
}

Value Tape::push(Node n) {
    nodes_.push_back(std::move(n));
    const Node& stored = nodes_.back();
    return Value{static_cast<int>(nodes_.size()) - 1, stored.val.rows, stored.val.cols};
}

const Tape::Node& Tape::node(Value v) const {
    if (!v.valid() || static_cast<std::size_t>(v.id) >= nodes_.size())
        throw ContractError("value handle does not belong to this tape");
    return nodes_[static_cast<std::size_t>(v.id)];
}

Tape::Node& Tape::node_mut(Value v) {
    return const_cast<Node&>(node(v));
}

Value Tape::leaf(Matrix m, bool requires_grad) {
    if (m.rows == 0 || m.cols == 0) throw DimensionError("leaf: empty shape " + m.shape_str());
    if (!all_finite(m)) throw ContractError("leaf: non-finite entries rejected");
    Node n;
    n.op = Op::Leaf;
    n.val = std::move(m);
    n.requires_grad = requires_grad;
    return push(std::move(n));
}

Value Tape::matmul(Value a, Value b) {
    check_valid(a, "matmul");
    check_valid(b, "matmul");
    Node n;
    n.op = Op::MatMul;
    n.in0 = a.id;
    n.in1 = b.id;
    n.val = tga::matmul(node(a).val, node(b).val);
    n.requires_grad = node(a).requires_grad || node(b).requires_grad;
    return push(std::move(n));
}

namespace {

void require_same(const Matrix& x, const Matrix& y, const char* op) {
    if (!x.same_shape(y))
        throw DimensionError(std::string(op) + ": shape mismatch " + x.shape_str() + " vs " +
                             y.shape_str());
}

} // namespace

Value Tape::add(Value a, Value b) {
    check_valid(a, "add");
    check_valid(b, "add");
    require_same(node(a).val, node(b).val, "add");
    Node n;
    n.op = Op::Add;
    n.in0 = a.id;
    n.in1 = b.id;
    n.val = tga::add(node(a).val, node(b).val);
    n.requires_grad = node(a).requires_grad || node(b).requires_grad;
    return push(std::move(n));
}

Value Tape::sub(Value a, Value b) {
    check_valid(a, "sub");
    check_valid(b, "sub");
    require_same(node(a).val, node(b).val, "sub");
    Node n;
    n.op = Op::Sub;
    n.in0 = a.id;
    n.in1 = b.id;
    n.val = tga::sub(node(a).val, node(b).val);
    n.requires_grad = node(a).requires_grad || node(b).requires_grad;
    return push(std::move(n));
}

Value Tape::hadamard(Value a, Value b) {
    check_valid(a, "hadamard");
    check_valid(b, "hadamard");
    require_same(node(a).val, node(b).val, "hadamard");
    Node n;
    n.op = Op::Hadamard;
    n.in0 = a.id;
    n.in1 = b.id;
    n.val = tga::hadamard(node(a).val, node(b).val);
    n.requires_grad = node(a).requires_grad || node(b).requires_grad;
    return push(std::move(n));
}

Value Tape::sigmoid(Value x) {
    check_valid(x, "sigmoid");
    Node n;
    n.op = Op::Sigmoid;
    n.in0 = x.id;
    n.val = node(x).val;
    for (double& v : n.val.a) v = 1.0 / (1.0 + std::exp(-v));
    n.requires_grad = node(x).requires_grad;
    return push(std::move(n));
}

Value Tape::tanh(Value x) {
    check_valid(x, "tanh");
    Node n;
    n.op = Op::Tanh;
    n.in0 = x.id;
    n.val = node(x).val;
    for (double& v : n.val.a) v = std::tanh(v);
    n.requires_grad = node(x).requires_grad;
    return push(std::move(n));
}

Value Tape::relu(Value x) {
    check_valid(x, "relu");
    Node n;
    n.op = Op::Relu;
    n.in0 = x.id;
    n.val = node(x).val;
    for (double& v : n.val.a) v = v > 0.0 ? v : 0.0;
    n.requires_grad = node(x).requires_grad;
    return push(std::move(n));
}

Value Tape::transpose(Value x) {
    check_valid(x, "transpose");
    Node n;
    n.op = Op::Transpose;
    n.in0 = x.id;
    n.val = tga::transpose(node(x).val);
    n.requires_grad = node(x).requires_grad;
    return push(std::move(n));
}

Value Tape::concat_rows(const std::vector<Value>& xs) {
    if (xs.empty()) throw ContractError("concat_rows: empty input list");
    for (Value v : xs) check_valid(v, "concat_rows");
    const std::size_t cols = node(xs[0]).val.cols;
    std::size_t rows = 0;
    for (Value v : xs) {
        if (node(v).val.cols != cols)
            throw DimensionError("concat_rows: column mismatch " + node(v).val.shape_str() +
                                 " vs " + node(xs[0]).val.shape_str());
        rows += node(v).val.rows;
    }
    Node n;
    n.op = Op::ConcatRows;
    n.val = Matrix(rows, cols);
    std::size_t at = 0;
    for (Value v : xs) {
        const Matrix& m = node(v).val;
        std::copy(m.a.begin(), m.a.end(), n.val.a.begin() + static_cast<std::ptrdiff_t>(at));
        at += m.size();
        n.in_list.push_back(v.id);
        n.requires_grad = n.requires_grad || node(v).requires_grad;
    }
    return push(std::move(n));
}

Value Tape::slice_row(Value x, std::size_t row) {
    check_valid(x, "slice_row");
    const Matrix& m = node(x).val;
    if (row >= m.rows)
        throw DimensionError("slice_row: row " + std::to_string(row) + " out of range for " +
                             m.shape_str());
    Node n;
    n.op = Op::SliceRow;
    n.in0 = x.id;
    n.index = row;
    n.val = Matrix(1, m.cols);
    for (std::size_t j = 0; j < m.cols; ++j) n.val(0, j) = m(row, j);
    n.requires_grad = node(x).requires_grad;
    return push(std::move(n));
}

Value Tape::sum_squares(Value x) {
    check_valid(x, "sum_squares");
    Node n;
    n.op = Op::SumSquares;
    n.in0 = x.id;
    double s = 0.0;
    for (double v : node(x).val.a) s += v * v;
    n.val = Matrix(1, 1, s);
    n.requires_grad = node(x).requires_grad;
    return push(std::move(n));
}

Value Tape::weighted_sum_squares(Value x, Matrix weights) {
    check_valid(x, "weighted_sum_squares");
    require_same(node(x).val, weights, "weighted_sum_squares");
    Node n;
    n.op = Op::WeightedSumSquares;
    n.in0 = x.id;
    double s = 0.0;
    const Matrix& m = node(x).val;
    for (std::size_t i = 0; i < m.size(); ++i) s += weights.a[i] * m.a[i] * m.a[i];
    n.val = Matrix(1, 1, s);
    n.aux = std::move(weights);
    n.requires_grad = node(x).requires_grad;
    return push(std::move(n));
}

Value Tape::scale(Value x, double s) {
    check_valid(x, "scale");
    Node n;
    n.op = Op::Scale;
    n.in0 = x.id;
    n.coeff = s;
    n.val = tga::scale(node(x).val, s);
    n.requires_grad = node(x).requires_grad;
    return push(std::move(n));
}

Value Tape::l2_norm(Value x) {
    check_valid(x, "l2_norm");
    Node n;
    n.op = Op::L2Norm;
    n.in0 = x.id;
    double s = 0.0;
    for (double v : node(x).val.a) s += v * v;
    n.val = Matrix(1, 1, std::sqrt(s));
    n.requires_grad = node(x).requires_grad;
    return push(std::move(n));
}

const Matrix& Tape::value(Value v) const {
    return node(v).val;
}

void Tape::backward(Value root) {
    const Node& r = node(root);
    if (!r.val.is_scalar())
        throw ContractError("backward: root must be scalar, got " + r.val.shape_str());

    for (Node& n : nodes_) {
        if (n.requires_grad) {
            n.grad = Matrix(n.val.rows, n.val.cols);
            n.grad_ready = true;
        } else {
            n.grad = Matrix();
            n.grad_ready = false;
        }
    }

    auto ensure = [&](int id) -> Matrix& { return nodes_[static_cast<std::size_t>(id)].grad; };

    if (!r.requires_grad) return; // root is constant: every gradient stays zero

    ensure(root.id).a[0] = 1.0;

    for (int id = root.id; id >= 0; --id) {
        Node& n = nodes_[static_cast<std::size_t>(id)];
        if (!n.requires_grad) continue;
        const Matrix& g = n.grad;
        auto wants = [&](int in) {
            return in >= 0 && nodes_[static_cast<std::size_t>(in)].requires_grad;
        };
        switch (n.op) {
            case Op::Leaf:
                break;
            case Op::MatMul: {
                const Matrix& a = nodes_[static_cast<std::size_t>(n.in0)].val;
                const Matrix& b = nodes_[static_cast<std::size_t>(n.in1)].val;
                if (wants(n.in0)) {
                    Matrix da = matmul_nt(g, b); // g * b^T
                    Matrix& acc = ensure(n.in0);
                    for (std::size_t i = 0; i < acc.size(); ++i) acc.a[i] += da.a[i];
                }
                if (wants(n.in1)) {
                    Matrix db = matmul_tn(a, g); // a^T * g
                    Matrix& acc = ensure(n.in1);
                    for (std::size_t i = 0; i < acc.size(); ++i) acc.a[i] += db.a[i];
                }
                break;
            }
            case Op::Add: {
                for (int in : {n.in0, n.in1}) {
                    if (!wants(in)) continue;
                    Matrix& acc = ensure(in);
                    for (std::size_t i = 0; i < acc.size(); ++i) acc.a[i] += g.a[i];
                }
                break;
            }
            case Op::Sub: {
                if (wants(n.in0)) {
                    Matrix& acc = ensure(n.in0);
                    for (std::size_t i = 0; i < acc.size(); ++i) acc.a[i] += g.a[i];
                }
                if (wants(n.in1)) {
                    Matrix& acc = ensure(n.in1);
                    for (std::size_t i = 0; i < acc.size(); ++i) acc.a[i] -= g.a[i];
                }
                break;
            }
            case Op::Hadamard: {
                const Matrix& a = nodes_[static_cast<std::size_t>(n.in0)].val;
                const Matrix& b = nodes_[static_cast<std::size_t>(n.in1)].val;
                if (wants(n.in0)) {
                    Matrix& acc = ensure(n.in0);
                    for (std::size_t i = 0; i < acc.size(); ++i) acc.a[i] += g.a[i] * b.a[i];
                }
                if (wants(n.in1)) {
                    Matrix& acc = ensure(n.in1);
                    for (std::size_t i = 0; i < acc.size(); ++i) acc.a[i] += g.a[i] * a.a[i];
                }
                break;
            }
            case Op::Sigmoid: {
                if (wants(n.in0)) {
                    Matrix& acc = ensure(n.in0);
                    for (std::size_t i = 0; i < acc.size(); ++i) {
                        const double y = n.val.a[i];
                        acc.a[i] += g.a[i] * y * (1.0 - y);
                    }
                }
                break;
            }
            case Op::Tanh: {
                if (wants(n.in0)) {
                    Matrix& acc = ensure(n.in0);
                    for (std::size_t i = 0; i < acc.size(); ++i) {
                        const double y = n.val.a[i];
                        acc.a[i] += g.a[i] * (1.0 - y * y);
                    }
                }
                break;
            }
            case Op::Relu: {
                if (wants(n.in0)) {
                    const Matrix& x = nodes_[static_cast<std::size_t>(n.in0)].val;
                    Matrix& acc = ensure(n.in0);
                    for (std::size_t i = 0; i < acc.size(); ++i)
                        acc.a[i] += x.a[i] > 0.0 ? g.a[i] : 0.0; // relu'(0) := 0
                }
                break;
            }
            case Op::Transpose: {
                if (wants(n.in0)) {
                    Matrix& acc = ensure(n.in0);
                    for (std::size_t i = 0; i < n.val.rows; ++i)
                        for (std::size_t j = 0; j < n.val.cols; ++j) acc(j, i) += g(i, j);
                }
                break;
            }
            case Op::ConcatRows: {
                std::size_t at = 0;
                for (int in : n.in_list) {
                    const Matrix& part = nodes_[static_cast<std::size_t>(in)].val;
                    if (wants(in)) {
                        Matrix& acc = ensure(in);
                        for (std::size_t i = 0; i < acc.size(); ++i) acc.a[i] += g.a[at + i];
                    }
                    at += part.size();
                }
                break;
            }
            case Op::SliceRow: {
                if (wants(n.in0)) {
                    Matrix& acc = ensure(n.in0);
                    for (std::size_t j = 0; j < n.val.cols; ++j) acc(n.index, j) += g(0, j);
                }
                break;
            }
            case Op::SumSquares: {
                if (wants(n.in0)) {
                    const Matrix& x = nodes_[static_cast<std::size_t>(n.in0)].val;
                    const double gs = g.a[0];
                    Matrix& acc = ensure(n.in0);
                    for (std::size_t i = 0; i < acc.size(); ++i) acc.a[i] += 2.0 * gs * x.a[i];
                }
                break;
            }
            case Op::WeightedSumSquares: {
                if (wants(n.in0)) {
                    const Matrix& x = nodes_[static_cast<std::size_t>(n.in0)].val;
                    const double gs = g.a[0];
                    Matrix& acc = ensure(n.in0);
                    for (std::size_t i = 0; i < acc.size(); ++i)
                        acc.a[i] += 2.0 * gs * n.aux.a[i] * x.a[i];
                }
                break;
            }
            case Op::Scale: {
                if (wants(n.in0)) {
                    Matrix& acc = ensure(n.in0);
                    for (std::size_t i = 0; i < acc.size(); ++i) acc.a[i] += n.coeff * g.a[i];
                }
                break;
            }
            case Op::L2Norm: {
                if (wants(n.in0)) {
                    const Matrix& x = nodes_[static_cast<std::size_t>(n.in0)].val;
                    const double norm = n.val.a[0];
                    const double gs = g.a[0];
                    Matrix& acc = ensure(n.in0);
                    if (norm > 0.0) {
                        for (std::size_t i = 0; i < acc.size(); ++i)
                            acc.a[i] += gs * x.a[i] / norm;
                    } // subgradient 0 at the origin
                }
                break;
            }
        }
    }
}

const Matrix& Tape::grad(Value v) const {
    const Node& n = node(v);
    if (!n.requires_grad)
        throw ContractError("grad: node " + std::to_string(v.id) + " does not require gradients");
    if (!n.grad_ready) throw ContractError("grad: call backward() first");
    return n.grad;
}

std::vector<Matrix> Tape::gradient_of_input(Value root, const std::vector<Value>& inputs) {
    for (Value v : inputs) {
        const Node& n = node(v);
        if (n.op != Op::Leaf || !n.requires_grad)
            throw ContractError("gradient_of_input: node " + std::to_string(v.id) +
                                " is not a differentiable leaf");
    }
    backward(root);
    std::vector<Matrix> out;
    out.reserve(inputs.size());
    for (Value v : inputs) out.push_back(grad(v));
    return out;
}

} // namespace tga::ad
