#pragma once

#include <complex>
#include <vector>

#include "fermips/sector.hpp"

namespace fermips {

using cplx = std::complex<double>;

enum class Spin : int { Up = 0, Down = 1 };

// One creation/annihilation operator on a spin orbital. The linear order for
// fermionic signs is interleaved: mode(site, spin) = 2*site + spin, i.e.
// site 0 up, site 0 down, site 1 up, ...
struct LadderFactor {
    int site = 0;
    Spin spin = Spin::Up;
    bool dagger = false;

    int mode() const { return 2 * site + static_cast<int>(spin); }
    SectorLabel delta() const {
        int dn = dagger ? 1 : -1;
        int ds = (spin == Spin::Up) ? dn : -dn;
        return {dn, ds};
    }
    auto operator<=>(const LadderFactor &) const = default;
};

struct OperatorTerm {
    cplx coefficient{0};
    std::vector<LadderFactor> factors; // leftmost factor acts last

    SectorLabel delta() const {
        SectorLabel d{0, 0};
        for (auto &f : factors) d += f.delta();
        return d;
    }
};

// Symbolic second-quantized operator: sum of coefficient x ladder strings
// over L spatial orbitals.
class FermionOperatorSum {
  public:
    FermionOperatorSum() = default;
    explicit FermionOperatorSum(int system_size) : system_size_(system_size) {}

    int system_size() const { return system_size_; }
    const std::vector<OperatorTerm> &terms() const { return terms_; }
    bool empty() const { return terms_.empty(); }

    void add_term(cplx coeff, std::vector<LadderFactor> factors);

    FermionOperatorSum adjoint() const;
    FermionOperatorSum scaled(cplx a) const;
    FermionOperatorSum operator+(const FermionOperatorSum &o) const;
    FermionOperatorSum operator*(const FermionOperatorSum &o) const;

    bool is_particle_conserving() const;
    bool is_sz_conserving() const;
    // Common sector delta of all terms; throws MixedSectorDelta otherwise.
    SectorLabel uniform_delta() const;

  private:
    int system_size_ = 0;
    std::vector<OperatorTerm> terms_;
};

// Canonical form: daggers left of non-daggers, mode indices ascending within
// each group, anticommutator corrections inserted; like terms combined and
// coefficients below 1e-14 pruned. Idempotent; equal operators map to
// identical forms.
FermionOperatorSum normal_order(const FermionOperatorSum &op);

bool is_hermitian(const FermionOperatorSum &op, double tol = 1e-10);

struct HubbardSpec {
    int sites = 2;
    double t_h = 1.0;
    double u = 0.0;
    bool periodic = false;

    void validate() const {
        if (sites < 2) throw InvalidSpec("Hubbard chain needs at least 2 sites");
        if (periodic && sites < 3)
            throw InvalidSpec("periodic chain needs at least 3 sites to avoid a doubled bond");
    }
};

// -t_h sum_{i,sigma} (c+_{i,s} c_{i+1,s} + h.c.) + U sum_i n_up n_dn
FermionOperatorSum hubbard_hamiltonian(const HubbardSpec &spec);

// J = -i t_h sum_{i,sigma} (c+_{i,s} c_{i+1,s} - h.c.)
FermionOperatorSum current_operator(const HubbardSpec &spec);

// One- and two-electron integrals, chemists' notation (ij|kl) with the full
// L^4 table stored expanded.
struct IntegralHamiltonian {
    int norb = 0;
    std::vector<cplx> h1;   // norb x norb, row-major
    std::vector<double> g2; // norb^4, (ij|kl) at ((i*L+j)*L+k)*L+l
    double e_core = 0.0;

    cplx h(int j, int k) const { return h1[j * norb + k]; }
    double g(int i, int j, int k, int l) const {
        return g2[((static_cast<long>(i) * norb + j) * norb + k) * norb + l];
    }
    void validate(double tol = 1e-10) const;
};

FermionOperatorSum from_integrals(const IntegralHamiltonian &h);

} // namespace fermips
