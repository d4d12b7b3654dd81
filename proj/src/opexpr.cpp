#include "fermips/opexpr.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>

namespace fermips {

namespace {
constexpr double kPruneTol = 1e-14;
}

void FermionOperatorSum::add_term(cplx coeff, std::vector<LadderFactor> factors) {
    for (auto &f : factors)
        if (f.site < 0 || f.site >= system_size_)
            throw SystemSizeMismatch("ladder factor site outside system");
    terms_.push_back({coeff, std::move(factors)});
}

FermionOperatorSum FermionOperatorSum::adjoint() const {
    FermionOperatorSum out(system_size_);
    for (auto &t : terms_) {
        std::vector<LadderFactor> rev(t.factors.rbegin(), t.factors.rend());
        for (auto &f : rev) f.dagger = !f.dagger;
        out.terms_.push_back({std::conj(t.coefficient), std::move(rev)});
    }
    return out;
}

FermionOperatorSum FermionOperatorSum::scaled(cplx a) const {
    FermionOperatorSum out = *this;
    for (auto &t : out.terms_) t.coefficient *= a;
    return out;
}

FermionOperatorSum FermionOperatorSum::operator+(const FermionOperatorSum &o) const {
    if (system_size_ != o.system_size_) throw SystemSizeMismatch("operator sum size mismatch");
    FermionOperatorSum out = *this;
    out.terms_.insert(out.terms_.end(), o.terms_.begin(), o.terms_.end());
    return out;
}

FermionOperatorSum FermionOperatorSum::operator*(const FermionOperatorSum &o) const {
    if (system_size_ != o.system_size_) throw SystemSizeMismatch("operator sum size mismatch");
    FermionOperatorSum out(system_size_);
    for (auto &a : terms_)
        for (auto &b : o.terms_) {
            std::vector<LadderFactor> f = a.factors;
            f.insert(f.end(), b.factors.begin(), b.factors.end());
            out.terms_.push_back({a.coefficient * b.coefficient, std::move(f)});
        }
    return out;
}

bool FermionOperatorSum::is_particle_conserving() const {
    for (auto &t : terms_)
        if (t.delta().n != 0) return false;
    return true;
}

bool FermionOperatorSum::is_sz_conserving() const {
    for (auto &t : terms_)
        if (t.delta().twice_sz != 0) return false;
    return true;
}

SectorLabel FermionOperatorSum::uniform_delta() const {
    if (terms_.empty()) return {0, 0};
    SectorLabel d = terms_.front().delta();
    for (auto &t : terms_)
        if (!(t.delta() == d)) throw MixedSectorDelta("terms carry different sector deltas");
    return d;
}

FermionOperatorSum normal_order(const FermionOperatorSum &op) {
    // canonical order: creation ops first (modes ascending), then
    // annihilation ops (modes ascending)
    auto out_of_order = [](const LadderFactor &a, const LadderFactor &b) {
        if (a.dagger != b.dagger) return !a.dagger && b.dagger;
        return a.mode() > b.mode();
    };
    std::map<std::vector<LadderFactor>, cplx> canon;
    std::deque<OperatorTerm> work(op.terms().begin(), op.terms().end());
    while (!work.empty()) {
        OperatorTerm t = std::move(work.front());
        work.pop_front();
        if (std::abs(t.coefficient) < kPruneTol) continue;
        bool rewritten = false;
        for (std::size_t i = 0; i + 1 < t.factors.size(); ++i) {
            LadderFactor &x = t.factors[i];
            LadderFactor &y = t.factors[i + 1];
            if (x.dagger == y.dagger && x.mode() == y.mode()) {
                rewritten = true; // x^2 = 0
                break;
            }
            if (!out_of_order(x, y)) continue;
            rewritten = true;
            if (x.mode() == y.mode()) {
                // a a+ = 1 - a+ a
                OperatorTerm contracted{t.coefficient, {}};
                contracted.factors.insert(contracted.factors.end(), t.factors.begin(),
                                          t.factors.begin() + i);
                contracted.factors.insert(contracted.factors.end(), t.factors.begin() + i + 2,
                                          t.factors.end());
                OperatorTerm swapped = t;
                std::swap(swapped.factors[i], swapped.factors[i + 1]);
                swapped.coefficient = -t.coefficient;
                work.push_back(std::move(contracted));
                work.push_back(std::move(swapped));
            } else {
                OperatorTerm swapped = t;
                std::swap(swapped.factors[i], swapped.factors[i + 1]);
                swapped.coefficient = -t.coefficient;
                work.push_back(std::move(swapped));
            }
            break;
        }
        if (!rewritten) canon[t.factors] += t.coefficient;
    }
    FermionOperatorSum out(op.system_size());
    for (auto &[factors, c] : canon) {
        if (std::abs(c) < kPruneTol) continue;
        out.add_term(c, factors);
    }
    return out;
}

bool is_hermitian(const FermionOperatorSum &op, double tol) {
    auto diff = normal_order(op + op.adjoint().scaled(-1.0));
    for (auto &t : diff.terms())
        if (std::abs(t.coefficient) > tol) return false;
    return true;
}

FermionOperatorSum hubbard_hamiltonian(const HubbardSpec &spec) {
    spec.validate();
    FermionOperatorSum h(spec.sites);
    const int nbonds = spec.periodic ? spec.sites : spec.sites - 1;
    for (int i = 0; i < nbonds; ++i) {
        int j = (i + 1) % spec.sites;
        for (Spin s : {Spin::Up, Spin::Down}) {
            h.add_term(-spec.t_h, {{i, s, true}, {j, s, false}});
            h.add_term(-spec.t_h, {{j, s, true}, {i, s, false}});
        }
    }
    if (spec.u != 0.0) {
        for (int i = 0; i < spec.sites; ++i)
            h.add_term(spec.u, {{i, Spin::Up, true},
                                {i, Spin::Up, false},
                                {i, Spin::Down, true},
                                {i, Spin::Down, false}});
    }
    return h;
}

FermionOperatorSum current_operator(const HubbardSpec &spec) {
    spec.validate();
    FermionOperatorSum j(spec.sites);
    const cplx mi{0.0, -1.0};
    const int nbonds = spec.periodic ? spec.sites : spec.sites - 1;
    for (int i = 0; i < nbonds; ++i) {
        int k = (i + 1) % spec.sites;
        for (Spin s : {Spin::Up, Spin::Down}) {
            j.add_term(mi * spec.t_h, {{i, s, true}, {k, s, false}});
            j.add_term(-mi * spec.t_h, {{k, s, true}, {i, s, false}});
        }
    }
    return j;
}

void IntegralHamiltonian::validate(double tol) const {
    const long L = norb;
    if (static_cast<long>(h1.size()) != L * L || static_cast<long>(g2.size()) != L * L * L * L)
        throw InvalidSpec("integral table sizes do not match norb");
    for (int j = 0; j < L; ++j)
        for (int k = 0; k < L; ++k)
            if (std::abs(h(j, k) - std::conj(h(k, j))) > tol)
                throw SymmetryViolation("h1 is not Hermitian");
    for (int i = 0; i < L; ++i)
        for (int j = 0; j < L; ++j)
            for (int k = 0; k < L; ++k)
                for (int l = 0; l < L; ++l) {
                    double v = g(i, j, k, l);
                    for (double w : {g(j, i, k, l), g(i, j, l, k), g(j, i, l, k), g(k, l, i, j),
                                     g(l, k, i, j), g(k, l, j, i), g(l, k, j, i)})
                        if (std::abs(v - w) > tol)
                            throw SymmetryViolation("g2 violates 8-fold permutation symmetry");
                }
}

FermionOperatorSum from_integrals(const IntegralHamiltonian &ints) {
    ints.validate();
    FermionOperatorSum h(ints.norb);
    if (ints.e_core != 0.0) h.add_term(ints.e_core, {});
    for (int j = 0; j < ints.norb; ++j)
        for (int k = 0; k < ints.norb; ++k) {
            cplx v = ints.h(j, k);
            if (std::abs(v) < kPruneTol) continue;
            for (Spin s : {Spin::Up, Spin::Down})
                h.add_term(v, {{j, s, true}, {k, s, false}});
        }
    // 1/2 sum_{ijkl,st} (ij|kl) c+_{i,s} c+_{k,t} c_{l,t} c_{j,s}
    for (int i = 0; i < ints.norb; ++i)
        for (int j = 0; j < ints.norb; ++j)
            for (int k = 0; k < ints.norb; ++k)
                for (int l = 0; l < ints.norb; ++l) {
                    double v = ints.g(i, j, k, l);
                    if (std::abs(v) < kPruneTol) continue;
                    for (Spin s : {Spin::Up, Spin::Down})
                        for (Spin t : {Spin::Up, Spin::Down})
                            h.add_term(0.5 * v, {{i, s, true},
                                                 {k, t, true},
                                                 {l, t, false},
                                                 {j, s, false}});
                }
    return h;
}

} // namespace fermips
