#include "chftpp/tape.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace chftpp {

int ParameterStore::add(const std::string& name, int rows, int cols, bool positive, int fan_in) {
    if (index_of(name) >= 0) {
        throw std::invalid_argument("duplicate parameter name: " + name);
    }
    Tensor t;
    t.name = name;
    t.rows = rows;
    t.cols = cols;
    t.positive = positive;
    t.fan_in = std::max(fan_in, 1);
    t.value.assign(static_cast<std::size_t>(rows) * cols, 0.0);
    t.grad.assign(t.value.size(), 0.0);
    tensors_.push_back(std::move(t));
    return static_cast<int>(tensors_.size()) - 1;
}

int ParameterStore::index_of(const std::string& name) const {
    for (std::size_t i = 0; i < tensors_.size(); ++i) {
        if (tensors_[i].name == name) return static_cast<int>(i);
    }
    return -1;
}

ParameterStore::Tensor& ParameterStore::at(const std::string& name) {
    int i = index_of(name);
    if (i < 0) throw std::out_of_range("no parameter named " + name);
    return tensors_[static_cast<std::size_t>(i)];
}

const ParameterStore::Tensor& ParameterStore::at(const std::string& name) const {
    int i = index_of(name);
    if (i < 0) throw std::out_of_range("no parameter named " + name);
    return tensors_[static_cast<std::size_t>(i)];
}

void ParameterStore::init_uniform(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    for (auto& t : tensors_) {
        double bound = 1.0 / std::sqrt(static_cast<double>(t.fan_in));
        std::uniform_real_distribution<double> dist(-bound, bound);
        for (auto& v : t.value) {
            v = dist(rng);
            if (t.positive) v = std::fabs(v);
        }
    }
}

void ParameterStore::zero_grad() {
    for (auto& t : tensors_) std::fill(t.grad.begin(), t.grad.end(), 0.0);
}

void ParameterStore::project() {
    for (auto& t : tensors_) {
        if (!t.positive) continue;
        for (auto& v : t.value) v = std::fabs(v);
    }
}

void Tape::clear() { nodes_.clear(); }

Var Tape::push(Node n) {
    n.t.resize(n.p.size(), 0.0);
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::constant(double v) {
    Node n;
    n.op = Op::Const;
    n.p = {v};
    n.rows = 1;
    n.cols = 1;
    return push(std::move(n));
}

Var Tape::constant(std::vector<double> v) {
    Node n;
    n.op = Op::Const;
    n.rows = static_cast<int>(v.size());
    n.cols = 1;
    n.p = std::move(v);
    return push(std::move(n));
}

Var Tape::constant_matrix(int rows, int cols, std::vector<double> v) {
    if (static_cast<int>(v.size()) != rows * cols) {
        throw std::invalid_argument("constant_matrix: size mismatch");
    }
    Node n;
    n.op = Op::Const;
    n.rows = rows;
    n.cols = cols;
    n.p = std::move(v);
    return push(std::move(n));
}

Var Tape::input(double v, double tangent) {
    Node n;
    n.op = Op::Input;
    n.p = {v};
    n.t = {tangent};
    n.rows = 1;
    n.cols = 1;
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::param(int tensor_index) {
    if (store_ == nullptr) throw std::logic_error("tape has no parameter store");
    const auto& t = store_->at(tensor_index);
    Node n;
    n.op = Op::Param;
    n.param = tensor_index;
    n.rows = t.rows;
    n.cols = t.cols;
    n.p = t.value;
    return push(std::move(n));
}

Var Tape::binary(Op op, Var a, Var b) {
    const Node& na = node(a);
    const Node& nb = node(b);
    std::size_t sa = na.p.size();
    std::size_t sb = nb.p.size();
    if (sa != sb && sa != 1 && sb != 1) {
        throw std::invalid_argument("tape binary op: shape mismatch");
    }
    std::size_t s = std::max(sa, sb);
    Node n;
    n.op = op;
    n.a = a.id;
    n.b = b.id;
    n.rows = static_cast<int>(s);
    n.cols = 1;
    n.p.resize(s);
    n.t.resize(s);
    for (std::size_t i = 0; i < s; ++i) {
        double x = na.p[sa == 1 ? 0 : i], xd = na.t[sa == 1 ? 0 : i];
        double y = nb.p[sb == 1 ? 0 : i], yd = nb.t[sb == 1 ? 0 : i];
        switch (op) {
            case Op::Add: n.p[i] = x + y; n.t[i] = xd + yd; break;
            case Op::Sub: n.p[i] = x - y; n.t[i] = xd - yd; break;
            case Op::Mul: n.p[i] = x * y; n.t[i] = xd * y + x * yd; break;
            case Op::Div: n.p[i] = x / y; n.t[i] = xd / y - x * yd / (y * y); break;
            case Op::Max2:
                if (x >= y) { n.p[i] = x; n.t[i] = xd; }
                else        { n.p[i] = y; n.t[i] = yd; }
                break;
            default: throw std::logic_error("not a binary op");
        }
    }
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::add(Var a, Var b) { return binary(Op::Add, a, b); }
Var Tape::sub(Var a, Var b) { return binary(Op::Sub, a, b); }
Var Tape::mul(Var a, Var b) { return binary(Op::Mul, a, b); }
Var Tape::div(Var a, Var b) { return binary(Op::Div, a, b); }
Var Tape::max2(Var a, Var b) { return binary(Op::Max2, a, b); }

Var Tape::unary(Op op, Var a) {
    const Node& na = node(a);
    std::size_t s = na.p.size();
    Node n;
    n.op = op;
    n.a = a.id;
    n.rows = na.rows;
    n.cols = na.cols;
    n.p.resize(s);
    n.t.resize(s);
    for (std::size_t i = 0; i < s; ++i) {
        double x = na.p[i], xd = na.t[i];
        switch (op) {
            case Op::Neg: n.p[i] = -x; n.t[i] = -xd; break;
            case Op::Tanh: {
                double y = std::tanh(x);
                n.p[i] = y;
                n.t[i] = (1.0 - y * y) * xd;
                break;
            }
            case Op::Relu: n.p[i] = x > 0.0 ? x : 0.0; n.t[i] = x > 0.0 ? xd : 0.0; break;
            case Op::Sigmoid: {
                double y = 1.0 / (1.0 + std::exp(-x));
                n.p[i] = y;
                n.t[i] = y * (1.0 - y) * xd;
                break;
            }
            case Op::Exp: {
                double y = std::exp(x);
                n.p[i] = y;
                n.t[i] = y * xd;
                break;
            }
            case Op::LogGuard:
                if (x > kLogFloor) { n.p[i] = std::log(x); n.t[i] = xd / x; }
                else               { n.p[i] = std::log(kLogFloor); n.t[i] = 0.0; }
                break;
            default: throw std::logic_error("not a unary op");
        }
    }
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::neg(Var a) { return unary(Op::Neg, a); }
Var Tape::tanh_(Var a) { return unary(Op::Tanh, a); }
Var Tape::relu(Var a) { return unary(Op::Relu, a); }
Var Tape::sigmoid(Var a) { return unary(Op::Sigmoid, a); }
Var Tape::exp_(Var a) { return unary(Op::Exp, a); }
Var Tape::log_guard(Var a) { return unary(Op::LogGuard, a); }

Var Tape::sum(Var a) {
    const Node& na = node(a);
    Node n;
    n.op = Op::Sum;
    n.a = a.id;
    n.rows = 1;
    n.cols = 1;
    double p = 0.0, t = 0.0;
    for (std::size_t i = 0; i < na.p.size(); ++i) { p += na.p[i]; t += na.t[i]; }
    n.p = {p};
    n.t = {t};
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::pick(Var a, int i) {
    const Node& na = node(a);
    if (i < 0 || i >= static_cast<int>(na.p.size())) {
        throw std::out_of_range("pick: index out of range");
    }
    Node n;
    n.op = Op::Pick;
    n.a = a.id;
    n.aux = i;
    n.rows = 1;
    n.cols = 1;
    n.p = {na.p[static_cast<std::size_t>(i)]};
    n.t = {na.t[static_cast<std::size_t>(i)]};
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::concat(Var a, Var b) {
    const Node& na = node(a);
    const Node& nb = node(b);
    Node n;
    n.op = Op::Concat;
    n.a = a.id;
    n.b = b.id;
    n.aux = static_cast<int>(na.p.size());
    n.rows = static_cast<int>(na.p.size() + nb.p.size());
    n.cols = 1;
    n.p = na.p;
    n.p.insert(n.p.end(), nb.p.begin(), nb.p.end());
    n.t = na.t;
    n.t.insert(n.t.end(), nb.t.begin(), nb.t.end());
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::row(Var matrix, int i) {
    const Node& nm = node(matrix);
    if (i < 0 || i >= nm.rows) throw std::out_of_range("row: index out of range");
    Node n;
    n.op = Op::Row;
    n.a = matrix.id;
    n.aux = i;
    n.rows = nm.cols;
    n.cols = 1;
    std::size_t off = static_cast<std::size_t>(i) * nm.cols;
    n.p.assign(nm.p.begin() + off, nm.p.begin() + off + nm.cols);
    n.t.assign(nm.t.begin() + off, nm.t.begin() + off + nm.cols);
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::matvec(Var matrix, Var x) {
    const Node& nm = node(matrix);
    const Node& nx = node(x);
    int r = nm.rows, c = nm.cols;
    if (static_cast<int>(nx.p.size()) != c) {
        throw std::invalid_argument("matvec: shape mismatch");
    }
    Node n;
    n.op = Op::MatVec;
    n.a = matrix.id;
    n.b = x.id;
    n.rows = r;
    n.cols = 1;
    n.p.assign(static_cast<std::size_t>(r), 0.0);
    n.t.assign(static_cast<std::size_t>(r), 0.0);
    for (int i = 0; i < r; ++i) {
        const double* w = nm.p.data() + static_cast<std::size_t>(i) * c;
        const double* wt = nm.t.data() + static_cast<std::size_t>(i) * c;
        double p = 0.0, t = 0.0;
        for (int j = 0; j < c; ++j) {
            p += w[j] * nx.p[static_cast<std::size_t>(j)];
            t += wt[j] * nx.p[static_cast<std::size_t>(j)] + w[j] * nx.t[static_cast<std::size_t>(j)];
        }
        n.p[static_cast<std::size_t>(i)] = p;
        n.t[static_cast<std::size_t>(i)] = t;
    }
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::tangent_of(Var a) {
    const Node& na = node(a);
    Node n;
    n.op = Op::TangentOf;
    n.a = a.id;
    n.rows = na.rows;
    n.cols = na.cols;
    n.p = na.t;
    n.t.assign(na.t.size(), 0.0);
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::softmax(Var logits) {
    double m = *std::max_element(node(logits).p.begin(), node(logits).p.end());
    Var shifted = sub(logits, constant(m));
    Var e = exp_(shifted);
    return div(e, sum(e));
}

Var Tape::log_softmax_at(Var logits, int i) {
    double m = *std::max_element(node(logits).p.begin(), node(logits).p.end());
    Var shifted = sub(logits, constant(m));
    Var lse = log_guard(sum(exp_(shifted)));
    return sub(pick(shifted, i), lse);
}

Var Tape::prelu(Var x, Var eta) { return max2(mul(eta, x), x); }

Var Tape::softplus(Var x, Var eta) {
    Var s = mul(eta, x);
    Var lp = log_guard(add(constant(1.0), exp_(s)));
    return div(lp, eta);
}

const std::vector<double>& Tape::value(Var v) const { return node(v).p; }
const std::vector<double>& Tape::tangent(Var v) const { return node(v).t; }
const std::vector<double>& Tape::adjoint(Var v) const { return node(v).ap; }

double Tape::scalar(Var v) const {
    const Node& n = node(v);
    if (n.p.size() != 1) throw std::logic_error("scalar() on non-scalar node");
    return n.p[0];
}

double Tape::tangent_scalar(Var v) const {
    const Node& n = node(v);
    if (n.t.size() != 1) throw std::logic_error("tangent_scalar() on non-scalar node");
    return n.t[0];
}

void Tape::backward(Var loss) {
    Node& ln = node(loss);
    if (ln.p.size() != 1) throw std::invalid_argument("backward: loss must be scalar");
    for (auto& n : nodes_) {
        n.ap.assign(n.p.size(), 0.0);
        n.at.assign(n.p.size(), 0.0);
    }
    ln.ap[0] = 1.0;
    for (std::size_t i = nodes_.size(); i-- > 0;) backward_node(i);
}

// Adjoint rules carry both channels. For y = f(x) with tangent
// yt = f'(x) xt, the contributions are
//   x.ap += y.ap f'(x) + y.at f''(x) xt
//   x.at += y.at f'(x)
void Tape::backward_node(std::size_t idx) {
    Node& n = nodes_[idx];
    bool any = false;
    for (double v : n.ap) { if (v != 0.0) { any = true; break; } }
    if (!any) {
        for (double v : n.at) { if (v != 0.0) { any = true; break; } }
    }
    if (!any && n.op != Op::Param) return;

    Node* na = n.a >= 0 ? &nodes_[static_cast<std::size_t>(n.a)] : nullptr;
    Node* nb = n.b >= 0 ? &nodes_[static_cast<std::size_t>(n.b)] : nullptr;

    auto acc = [](Node* m, std::size_t i, std::size_t sz, double dp, double dt) {
        std::size_t k = sz == 1 ? 0 : i;
        m->ap[k] += dp;
        m->at[k] += dt;
    };

    switch (n.op) {
        case Op::Const:
        case Op::Input:
            break;
        case Op::Param:
            if (store_ != nullptr && n.param >= 0) {
                auto& g = store_->at(n.param).grad;
                for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.ap[i];
            }
            break;
        case Op::Add:
            for (std::size_t i = 0; i < n.p.size(); ++i) {
                acc(na, i, na->p.size(), n.ap[i], n.at[i]);
                acc(nb, i, nb->p.size(), n.ap[i], n.at[i]);
            }
            break;
        case Op::Sub:
            for (std::size_t i = 0; i < n.p.size(); ++i) {
                acc(na, i, na->p.size(), n.ap[i], n.at[i]);
                acc(nb, i, nb->p.size(), -n.ap[i], -n.at[i]);
            }
            break;
        case Op::Mul:
            for (std::size_t i = 0; i < n.p.size(); ++i) {
                std::size_t ia = na->p.size() == 1 ? 0 : i;
                std::size_t ib = nb->p.size() == 1 ? 0 : i;
                double x = na->p[ia], xd = na->t[ia];
                double y = nb->p[ib], yd = nb->t[ib];
                acc(na, i, na->p.size(), n.ap[i] * y + n.at[i] * yd, n.at[i] * y);
                acc(nb, i, nb->p.size(), n.ap[i] * x + n.at[i] * xd, n.at[i] * x);
            }
            break;
        case Op::Div:
            for (std::size_t i = 0; i < n.p.size(); ++i) {
                std::size_t ia = na->p.size() == 1 ? 0 : i;
                std::size_t ib = nb->p.size() == 1 ? 0 : i;
                double x = na->p[ia], xd = na->t[ia];
                double y = nb->p[ib], yd = nb->t[ib];
                double inv = 1.0 / y;
                acc(na, i, na->p.size(),
                    n.ap[i] * inv - n.at[i] * yd * inv * inv,
                    n.at[i] * inv);
                acc(nb, i, nb->p.size(),
                    -n.ap[i] * x * inv * inv +
                        n.at[i] * (-xd * inv * inv + 2.0 * x * yd * inv * inv * inv),
                    -n.at[i] * x * inv * inv);
            }
            break;
        case Op::Max2:
            for (std::size_t i = 0; i < n.p.size(); ++i) {
                std::size_t ia = na->p.size() == 1 ? 0 : i;
                std::size_t ib = nb->p.size() == 1 ? 0 : i;
                if (na->p[ia] >= nb->p[ib]) acc(na, i, na->p.size(), n.ap[i], n.at[i]);
                else                        acc(nb, i, nb->p.size(), n.ap[i], n.at[i]);
            }
            break;
        case Op::Neg:
            for (std::size_t i = 0; i < n.p.size(); ++i) {
                na->ap[i] -= n.ap[i];
                na->at[i] -= n.at[i];
            }
            break;
        case Op::Tanh:
            for (std::size_t i = 0; i < n.p.size(); ++i) {
                double y = n.p[i];
                double d1 = 1.0 - y * y;
                double d2 = -2.0 * y * d1;
                na->ap[i] += n.ap[i] * d1 + n.at[i] * d2 * na->t[i];
                na->at[i] += n.at[i] * d1;
            }
            break;
        case Op::Relu:
            for (std::size_t i = 0; i < n.p.size(); ++i) {
                if (na->p[i] > 0.0) {
                    na->ap[i] += n.ap[i];
                    na->at[i] += n.at[i];
                }
            }
            break;
        case Op::Sigmoid:
            for (std::size_t i = 0; i < n.p.size(); ++i) {
                double y = n.p[i];
                double d1 = y * (1.0 - y);
                double d2 = d1 * (1.0 - 2.0 * y);
                na->ap[i] += n.ap[i] * d1 + n.at[i] * d2 * na->t[i];
                na->at[i] += n.at[i] * d1;
            }
            break;
        case Op::Exp:
            for (std::size_t i = 0; i < n.p.size(); ++i) {
                double y = n.p[i];
                na->ap[i] += n.ap[i] * y + n.at[i] * y * na->t[i];
                na->at[i] += n.at[i] * y;
            }
            break;
        case Op::LogGuard:
            for (std::size_t i = 0; i < n.p.size(); ++i) {
                double x = na->p[i];
                if (x > kLogFloor) {
                    double inv = 1.0 / x;
                    na->ap[i] += n.ap[i] * inv - n.at[i] * inv * inv * na->t[i];
                    na->at[i] += n.at[i] * inv;
                }
            }
            break;
        case Op::Sum:
            for (std::size_t i = 0; i < na->p.size(); ++i) {
                na->ap[i] += n.ap[0];
                na->at[i] += n.at[0];
            }
            break;
        case Op::Pick: {
            std::size_t i = static_cast<std::size_t>(n.aux);
            na->ap[i] += n.ap[0];
            na->at[i] += n.at[0];
            break;
        }
        case Op::Concat: {
            std::size_t sa = static_cast<std::size_t>(n.aux);
            for (std::size_t i = 0; i < sa; ++i) {
                na->ap[i] += n.ap[i];
                na->at[i] += n.at[i];
            }
            for (std::size_t i = sa; i < n.p.size(); ++i) {
                nb->ap[i - sa] += n.ap[i];
                nb->at[i - sa] += n.at[i];
            }
            break;
        }
        case Op::Row: {
            std::size_t off = static_cast<std::size_t>(n.aux) * na->cols;
            for (std::size_t i = 0; i < n.p.size(); ++i) {
                na->ap[off + i] += n.ap[i];
                na->at[off + i] += n.at[i];
            }
            break;
        }
        case Op::MatVec: {
            int r = na->rows, c = na->cols;
            for (int i = 0; i < r; ++i) {
                std::size_t si = static_cast<std::size_t>(i);
                double gp = n.ap[si], gt = n.at[si];
                if (gp == 0.0 && gt == 0.0) continue;
                std::size_t off = si * c;
                for (int j = 0; j < c; ++j) {
                    std::size_t sj = static_cast<std::size_t>(j);
                    na->ap[off + sj] += gp * nb->p[sj] + gt * nb->t[sj];
                    na->at[off + sj] += gt * nb->p[sj];
                    nb->ap[sj] += gp * na->p[off + sj] + gt * na->t[off + sj];
                    nb->at[sj] += gt * na->p[off + sj];
                }
            }
            break;
        }
        case Op::TangentOf:
            // Primal of this node is the parent's tangent; its adjoint
            // therefore flows into the parent's tangent adjoint.
            for (std::size_t i = 0; i < n.p.size(); ++i) na->at[i] += n.ap[i];
            break;
    }
}

}  // namespace chftpp
