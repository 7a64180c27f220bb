#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace chftpp {

// Named trainable tensors. Tensors flagged `positive` are kept nonnegative
// by project(), which takes absolute values in place.
class ParameterStore {
public:
    struct Tensor {
        std::string name;
        int rows = 0;
        int cols = 0;
        bool positive = false;
        int fan_in = 1;
        std::vector<double> value;
        std::vector<double> grad;
    };

    int add(const std::string& name, int rows, int cols, bool positive, int fan_in);
    int index_of(const std::string& name) const;  // -1 if absent
    Tensor& at(int index) { return tensors_[static_cast<std::size_t>(index)]; }
    const Tensor& at(int index) const { return tensors_[static_cast<std::size_t>(index)]; }
    Tensor& at(const std::string& name);
    const Tensor& at(const std::string& name) const;
    std::size_t count() const { return tensors_.size(); }

    void init_uniform(std::uint64_t seed);
    void zero_grad();
    void project();

private:
    std::vector<Tensor> tensors_;
};

// Handle into a Tape recording.
struct Var {
    int id = -1;
    bool valid() const { return id >= 0; }
};

// Reverse-mode tape over small dense tensors, extended with one scalar
// forward tangent channel. Seeding a scalar input with tangent 1 makes
// every downstream node carry its derivative w.r.t. that input, and
// tangent_of() lifts the tangent into a first-class node so the reverse
// pass can differentiate through it (mixed d2/dparam dtau).
class Tape {
public:
    explicit Tape(ParameterStore* store = nullptr) : store_(store) {}

    void clear();
    std::size_t size() const { return nodes_.size(); }

    Var constant(double v);
    Var constant(std::vector<double> v);
    Var constant_matrix(int rows, int cols, std::vector<double> v);
    Var input(double v, double tangent);
    Var param(int tensor_index);

    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var mul(Var a, Var b);
    Var div(Var a, Var b);
    Var max2(Var a, Var b);
    Var neg(Var a);
    Var tanh_(Var a);
    Var relu(Var a);
    Var sigmoid(Var a);
    Var exp_(Var a);
    Var log_guard(Var a);  // log(max(x, 1e-12))
    Var sum(Var a);
    Var pick(Var a, int i);
    Var concat(Var a, Var b);
    Var row(Var matrix, int i);
    Var matvec(Var matrix, Var x);
    Var tangent_of(Var a);

    // Compositions over the primitive set.
    Var softmax(Var logits);
    Var log_softmax_at(Var logits, int i);
    Var prelu(Var x, Var eta);     // max(eta*x, x), eta scalar
    Var softplus(Var x, Var eta);  // log(1 + exp(eta*x)) / eta, eta scalar

    const std::vector<double>& value(Var v) const;
    const std::vector<double>& tangent(Var v) const;
    double scalar(Var v) const;
    double tangent_scalar(Var v) const;
    const std::vector<double>& adjoint(Var v) const;

    // Accumulates d(loss)/d(theta) into the store's grad buffers.
    void backward(Var loss);

private:
    enum class Op : std::uint8_t {
        Const, Input, Param,
        Add, Sub, Mul, Div, Max2,
        Neg, Tanh, Relu, Sigmoid, Exp, LogGuard,
        Sum, Pick, Concat, Row, MatVec, TangentOf,
    };

    struct Node {
        Op op = Op::Const;
        int a = -1;
        int b = -1;
        int aux = 0;  // pick/row index
        int rows = 0;
        int cols = 0;
        int param = -1;
        std::vector<double> p;   // primal
        std::vector<double> t;   // tangent
        std::vector<double> ap;  // adjoint of primal
        std::vector<double> at;  // adjoint of tangent
    };

    Node& node(Var v) { return nodes_[static_cast<std::size_t>(v.id)]; }
    const Node& node(Var v) const { return nodes_[static_cast<std::size_t>(v.id)]; }
    Var push(Node n);
    Var binary(Op op, Var a, Var b);
    Var unary(Op op, Var a);
    void backward_node(std::size_t i);

    ParameterStore* store_ = nullptr;
    std::vector<Node> nodes_;
};

constexpr double kLogFloor = 1e-12;

}  // namespace chftpp
