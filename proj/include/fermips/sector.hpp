#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <ostream>

#include "fermips/errors.hpp"

namespace fermips {

// Conserved-quantity label (particle number, twice the projected spin).
// Labels form an abelian group under component-wise addition.
struct SectorLabel {
    int n = 0;
    int twice_sz = 0;

    // Each electron contributes +-1 to twice_sz, so the parities agree.
    bool parity_ok() const { return (((n ^ twice_sz) & 1) == 0); }

    friend SectorLabel operator+(SectorLabel a, SectorLabel b) {
        return {a.n + b.n, a.twice_sz + b.twice_sz};
    }
    friend SectorLabel operator-(SectorLabel a, SectorLabel b) {
        return {a.n - b.n, a.twice_sz - b.twice_sz};
    }
    SectorLabel operator-() const { return {-n, -twice_sz}; }
    SectorLabel &operator+=(SectorLabel b) {
        n += b.n;
        twice_sz += b.twice_sz;
        return *this;
    }

    // Total order: ascending n, then ascending twice_sz. Fixes dense-embed
    // offsets and singular-value tie-breaking.
    auto operator<=>(const SectorLabel &) const = default;

    friend std::ostream &operator<<(std::ostream &os, SectorLabel s) {
        return os << "(" << s.n << "," << s.twice_sz << ")";
    }
};

enum class AxisDir : std::uint8_t { In, Out };

inline AxisDir flip(AxisDir d) { return d == AxisDir::In ? AxisDir::Out : AxisDir::In; }

// One tensor leg: a direction and a finite sector -> dimension map.
struct AxisSignature {
    AxisDir dir = AxisDir::In;
    std::map<SectorLabel, long> sectors;

    long dim(SectorLabel s) const {
        auto it = sectors.find(s);
        return it == sectors.end() ? 0 : it->second;
    }
    long total_dim() const {
        long t = 0;
        for (auto &[s, d] : sectors) t += d;
        return t;
    }
    // Offset of a sector in the dense embedding of this axis.
    long offset(SectorLabel s) const {
        long off = 0;
        for (auto &[q, d] : sectors) {
            if (q == s) return off;
            off += d;
        }
        throw OutOfRange("sector not present on axis");
    }
    bool same_sectors(const AxisSignature &o) const { return sectors == o.sectors; }

    AxisSignature flipped() const { return {flip(dir), sectors}; }

    void validate() const {
        for (auto &[s, d] : sectors) {
            if (d < 1) throw InvalidSpec("axis sector dimension must be >= 1");
            if (!s.parity_ok()) throw InvalidSpec("sector label parity violation");
        }
    }
};

} // namespace fermips
