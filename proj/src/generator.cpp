#include "oqs/generator.hpp"
#include "oqs/errors.hpp"

#include <cmath>

namespace oqs::quadratic {

using hilbert::OperatorSet;

Symbol Symbol::operator+(const Symbol& o) const {
    return {c + o.c, x + o.x, p + o.p, xx + o.xx, pp + o.pp, xp + o.xp};
}

Symbol Symbol::operator*(double s) const { return {c * s, x * s, p * s, xx * s, pp * s, xp * s}; }

Symbol symbol(const LinearForm& l) { return {0.0, l.x, l.p, 0.0, 0.0, 0.0}; }

namespace {

bool is_affine(const Symbol& s) { return s.xx == 0.0 && s.pp == 0.0 && s.xp == 0.0; }

// ∂s/∂x and ∂s/∂p as affine symbols
Symbol dx(const Symbol& s) { return {s.x, 2.0 * s.xx, s.xp, 0.0, 0.0, 0.0}; }
Symbol dp(const Symbol& s) { return {s.p, s.xp, 2.0 * s.pp, 0.0, 0.0, 0.0}; }

} // namespace

Symbol product(const Symbol& a, const Symbol& b) {
    if (!is_affine(a) || !is_affine(b))
        throw InvalidOperator("product: only affine symbols can be multiplied exactly");
    return {a.c * b.c,
            a.c * b.x + a.x * b.c,
            a.c * b.p + a.p * b.c,
            a.x * b.x,
            a.p * b.p,
            a.x * b.p + a.p * b.x};
}

Symbol poisson_bracket(const Symbol& a, const Symbol& b) {
    return product(dx(a), dp(b)) + product(dp(a), dx(b)) * -1.0;
}

std::string to_string(TermRole r) {
    switch (r) {
    case TermRole::position_diffusion: return "position_diffusion";
    case TermRole::momentum_diffusion: return "momentum_diffusion";
    case TermRole::cross_diffusion: return "cross_diffusion";
    case TermRole::friction: return "friction";
    }
    return "unknown";
}

Eigen::Matrix<double, 5, 1> PhaseMoments::vec() const {
    Eigen::Matrix<double, 5, 1> v;
    v << x, p, xx, pp, xp;
    return v;
}

PhaseMoments PhaseMoments::from_vec(const Eigen::Matrix<double, 5, 1>& v) {
    return {v[0], v[1], v[2], v[3], v[4]};
}

PhaseMoments moments_of(const OperatorSet& ops, const Matrix& rho) {
    auto ev = [&](const Matrix& o) { return (o.transpose().cwiseProduct(rho)).sum().real(); };
    return {ev(ops.x), ev(ops.p), ev(ops.x2), ev(ops.p2), ev(ops.xp_anti)};
}

namespace {

// L·M for a linear form L = a x + b p
Matrix left(const OperatorSet& ops, const LinearForm& l, const Matrix& m) {
    Matrix out = Matrix::Zero(m.rows(), m.cols());
    if (l.x != 0.0) {
        if (ops.x_is_diagonal()) out += l.x * (ops.x.diagonal().asDiagonal() * m);
        else out += l.x * (ops.x * m);
    }
    if (l.p != 0.0) out.noalias() += l.p * (ops.p * m);
    return out;
}

Matrix right(const OperatorSet& ops, const LinearForm& l, const Matrix& m) {
    Matrix out = Matrix::Zero(m.rows(), m.cols());
    if (l.x != 0.0) {
        if (ops.x_is_diagonal()) out += l.x * (m * ops.x.diagonal().asDiagonal());
        else out += l.x * (m * ops.x);
    }
    if (l.p != 0.0) out.noalias() += l.p * (m * ops.p);
    return out;
}

Matrix comm(const OperatorSet& ops, const LinearForm& l, const Matrix& m) {
    if (l.p == 0.0 && ops.x_is_diagonal()) {
        // [x, M]_ij = (x_i - x_j) M_ij
        const auto d = ops.x.diagonal();
        Matrix out(m.rows(), m.cols());
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            for (Eigen::Index i = 0; i < m.rows(); ++i)
                out(i, j) = l.x * (d[i].real() - d[j].real()) * m(i, j);
        return out;
    }
    return left(ops, l, m) - right(ops, l, m);
}

Matrix anti(const OperatorSet& ops, const LinearForm& l, const Matrix& m) {
    return left(ops, l, m) + right(ops, l, m);
}

void check_dims(const OperatorSet& ops, const Matrix& rho) {
    if (rho.rows() != ops.dim() || rho.cols() != ops.dim())
        throw DimensionError("QuadraticGenerator::apply: rho does not live on the operator space");
}

} // namespace

Matrix QuadraticGenerator::apply(const OperatorSet& ops, const Matrix& rho) const {
    check_dims(ops, rho);
    const auto& h = hamiltonian;
    Matrix H = Matrix::Zero(ops.dim(), ops.dim());
    if (h.xx != 0.0) H += h.xx * ops.x2;
    if (h.pp != 0.0) H += h.pp * ops.p2;
    if (h.xp != 0.0) H += h.xp * ops.xp_anti;
    Matrix out = (cplx(0.0, -1.0 / hbar)) * (H * rho - rho * H);
    for (const auto& term : terms) {
        if (term.coeff == 0.0) continue;
        const Matrix inner = term.kind == TermKind::double_commutator ? comm(ops, term.inner, rho)
                                                                      : anti(ops, term.inner, rho);
        out += term.coeff * comm(ops, term.outer, inner);
    }
    return out;
}

Symbol QuadraticGenerator::heisenberg_symbol(const Symbol& obs) const {
    const Symbol H{0.0, 0.0, 0.0, hamiltonian.xx, hamiltonian.pp, 2.0 * hamiltonian.xp};
    // Tr(O (-i/hbar)[H, rho]) = ⟨(i/hbar)[H, O]⟩ and [A,B] ↔ i hbar {A,B}
    Symbol out = poisson_bracket(obs, H);
    const cplx ih(0.0, hbar);
    for (const auto& term : terms) {
        const Symbol oa = poisson_bracket(obs, symbol(term.outer));
        cplx factor;
        Symbol s;
        if (term.kind == TermKind::double_commutator) {
            // Tr(O [A,[B,rho]]) = ⟨[[O,A],B]⟩ = (i hbar)^2 {{O,A},B}
            s = poisson_bracket(oa, symbol(term.inner));
            factor = term.coeff * ih * ih;
        } else {
            // Tr(O [A,{B,rho}]) = ⟨{[O,A],B}⟩; for affine symbols the
            // anticommutator's symbol is twice the product.
            s = product(oa, symbol(term.inner));
            factor = term.coeff * ih * 2.0;
        }
        if (std::abs(factor.imag()) > 1e-12 * std::max(1.0, std::abs(factor)))
            throw InvalidOperator("QuadraticGenerator: term with coefficient that does not preserve Hermiticity");
        out = out + s * factor.real();
    }
    return out;
}

void QuadraticGenerator::moment_system(Eigen::Matrix<double, 5, 5>& M,
                                       Eigen::Matrix<double, 5, 1>& b) const {
    // observables x, p, x², p², {x,p} (Weyl symbol 2xp)
    const Symbol obs[5] = {{0, 1, 0, 0, 0, 0}, {0, 0, 1, 0, 0, 0}, {0, 0, 0, 1, 0, 0},
                           {0, 0, 0, 0, 1, 0}, {0, 0, 0, 0, 0, 2}};
    for (int r = 0; r < 5; ++r) {
        const Symbol s = heisenberg_symbol(obs[r]);
        // ⟨s⟩ = c + x⟨x⟩ + p⟨p⟩ + xx⟨x²⟩ + pp⟨p²⟩ + xp⟨{x,p}⟩/2
        b[r] = s.c;
        M(r, 0) = s.x;
        M(r, 1) = s.p;
        M(r, 2) = s.xx;
        M(r, 3) = s.pp;
        M(r, 4) = 0.5 * s.xp;
    }
}

PhaseMoments QuadraticGenerator::moment_rate(const PhaseMoments& m) const {
    Eigen::Matrix<double, 5, 5> M;
    Eigen::Matrix<double, 5, 1> b;
    moment_system(M, b);
    return PhaseMoments::from_vec(M * m.vec() + b);
}

QuadraticGenerator QuadraticGenerator::hamiltonian_only() const {
    QuadraticGenerator g = *this;
    g.terms.clear();
    return g;
}

cplx QuadraticGenerator::coefficient(TermRole role) const {
    cplx s = 0.0;
    for (const auto& t : terms)
        if (t.role == role) s += t.coeff;
    return s;
}

} // namespace oqs::quadratic
