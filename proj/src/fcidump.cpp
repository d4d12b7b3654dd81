#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <sstream>

#include "fermips/io.hpp"

namespace fermips {

namespace {

bool ci_match(const std::string &text, std::size_t pos, const char *word) {
    for (std::size_t k = 0; word[k]; ++k) {
        if (pos + k >= text.size()) return false;
        if (std::toupper(static_cast<unsigned char>(text[pos + k])) != word[k]) return false;
    }
    return true;
}

bool parse_int(const std::string &s, long &out) {
    if (s.empty()) return false;
    char *end = nullptr;
    errno = 0;
    out = std::strtol(s.c_str(), &end, 10);
    return errno == 0 && end && *end == '\0';
}

bool parse_real(const std::string &s, double &out) {
    if (s.empty()) return false;
    char *end = nullptr;
    errno = 0;
    std::string t = s;
    // Fortran exponent markers
    for (auto &c : t)
        if (c == 'D' || c == 'd') c = 'e';
    out = std::strtod(t.c_str(), &end);
    return end && *end == '\0' && std::isfinite(out);
}

// canonical index tuple under the 8-fold permutation symmetry
std::array<int, 4> canonical(const FCIDumpRecord &r) {
    if (r.k == 0 && r.l == 0) return {std::max(r.i, r.j), std::min(r.i, r.j), 0, 0};
    int a = std::max(r.i, r.j), b = std::min(r.i, r.j);
    int c = std::max(r.k, r.l), d = std::min(r.k, r.l);
    if (std::pair{a, b} < std::pair{c, d}) {
        std::swap(a, c);
        std::swap(b, d);
    }
    return {a, b, c, d};
}

} // namespace

FCIDumpData parse_fcidump(const std::string &text) {
    std::size_t pos = 0;
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    if (!ci_match(text, pos, "&FCI")) throw MalformedHeader("input does not start with &FCI");
    pos += 4;

    // header runs to &END or a bare '/'
    std::size_t body = std::string::npos, hdr_end = std::string::npos;
    for (std::size_t k = pos; k < text.size(); ++k) {
        if (text[k] == '/') {
            hdr_end = k;
            body = k + 1;
            break;
        }
        if (text[k] == '&' && ci_match(text, k, "&END")) {
            hdr_end = k;
            body = k + 4;
            break;
        }
    }
    if (hdr_end == std::string::npos) throw MalformedHeader("missing &END or / terminator");

    // tokenize the header; '=' is its own token, commas are separators
    std::vector<std::string> tokens;
    std::string cur;
    for (std::size_t k = pos; k < hdr_end; ++k) {
        char c = text[k];
        if (std::isspace(static_cast<unsigned char>(c)) || c == ',' || c == '=') {
            if (!cur.empty()) tokens.push_back(std::move(cur)), cur.clear();
            if (c == '=') tokens.push_back("=");
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) tokens.push_back(std::move(cur));

    std::map<std::string, std::vector<std::string>> kv;
    std::vector<std::string> key_order;
    for (std::size_t k = 0; k < tokens.size();) {
        if (k + 1 >= tokens.size() || tokens[k] == "=" || tokens[k + 1] != "=")
            throw MalformedHeader("header is not a key=value list near '" + tokens[k] + "'");
        std::string key = tokens[k];
        for (auto &c : key) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        k += 2;
        auto &vals = kv[key];
        if (vals.empty()) key_order.push_back(key);
        while (k < tokens.size() && tokens[k] != "=" &&
               (k + 1 >= tokens.size() || tokens[k + 1] != "="))
            vals.push_back(tokens[k++]);
    }

    FCIDumpData d;
    auto take_int = [&](const char *key, bool required, long lo, long hi, long fallback) {
        auto it = kv.find(key);
        if (it == kv.end()) {
            if (required) throw MalformedHeader(std::string("missing header key ") + key);
            return fallback;
        }
        long v = 0;
        if (it->second.size() != 1 || !parse_int(it->second[0], v))
            throw MalformedHeader(std::string(key) + " is not a single integer");
        if (v < lo || v > hi)
            throw MalformedHeader(std::string(key) + "=" + std::to_string(v) +
                                  " outside supported range");
        return v;
    };
    d.norb = static_cast<int>(take_int("NORB", true, 1, 32, 0));
    d.nelec = static_cast<int>(take_int("NELEC", true, 0, 2L * d.norb, 0));
    d.ms2 = static_cast<int>(take_int("MS2", true, -d.nelec, d.nelec, 0));
    if ((d.nelec - d.ms2) % 2 != 0) throw MalformedHeader("MS2 parity incompatible with NELEC");
    for (auto &key : key_order)
        if (key != "NORB" && key != "NELEC" && key != "MS2")
            d.warnings.push_back("ignoring header key " + key);

    // body: value then four indices per line
    std::istringstream lines(text.substr(body));
    std::string line;
    while (std::getline(lines, line)) {
        std::istringstream fields(line);
        std::vector<std::string> f;
        std::string tok;
        while (fields >> tok) f.push_back(tok);
        if (f.empty()) continue;
        if (f.size() != 5) throw ParseError("integral line needs 5 fields: '" + line + "'");
        FCIDumpRecord r;
        long idx[4];
        if (!parse_real(f[0], r.value)) throw ParseError("bad integral value '" + f[0] + "'");
        for (int k = 0; k < 4; ++k)
            if (!parse_int(f[k + 1], idx[k])) throw ParseError("bad index '" + f[k + 1] + "'");
        r.i = static_cast<int>(idx[0]);
        r.j = static_cast<int>(idx[1]);
        r.k = static_cast<int>(idx[2]);
        r.l = static_cast<int>(idx[3]);
        for (int k = 0; k < 4; ++k)
            if (idx[k] < 0 || idx[k] > d.norb)
                throw IndexOutOfRange("index " + std::to_string(idx[k]) + " with NORB=" +
                                      std::to_string(d.norb));
        int zeros = (r.i == 0) + (r.j == 0) + (r.k == 0) + (r.l == 0);
        bool core = zeros == 4, one = (zeros == 2 && r.k == 0 && r.l == 0), two = zeros == 0;
        if (!core && !one && !two)
            throw ParseError("unsupported zero-index pattern in '" + line + "'");
        d.records.push_back(r);
    }
    (void)d.to_integrals(); // surfaces conflicting duplicates at parse time
    return d;
}

IntegralHamiltonian FCIDumpData::to_integrals() const {
    IntegralHamiltonian h;
    h.norb = norb;
    h.h1.assign(static_cast<std::size_t>(norb) * norb, cplx{0});
    h.g2.assign(static_cast<std::size_t>(norb) * norb * norb * norb, 0.0);
    std::map<std::array<int, 4>, double> seen;
    for (auto &r : records) {
        auto key = canonical(r);
        auto [it, fresh] = seen.emplace(key, r.value);
        if (!fresh) {
            if (std::abs(it->second - r.value) > 1e-10)
                throw DuplicateConflictingRecord(
                    "record (" + std::to_string(r.i) + "," + std::to_string(r.j) + "," +
                    std::to_string(r.k) + "," + std::to_string(r.l) + ") restated with a " +
                    "different value");
            continue; // consistent restatement
        }
        if (key[0] == 0) {
            h.e_core = r.value;
        } else if (key[2] == 0) {
            h.h1[(key[0] - 1) * norb + (key[1] - 1)] = r.value;
            h.h1[(key[1] - 1) * norb + (key[0] - 1)] = r.value;
        } else {
            int a = key[0] - 1, b = key[1] - 1, c = key[2] - 1, e = key[3] - 1;
            auto put = [&](int i, int j, int k, int l) {
                h.g2[((static_cast<long>(i) * norb + j) * norb + k) * norb + l] = r.value;
            };
            put(a, b, c, e), put(b, a, c, e), put(a, b, e, c), put(b, a, e, c);
            put(c, e, a, b), put(e, c, a, b), put(c, e, b, a), put(e, c, b, a);
        }
    }
    return h;
}

std::string write_fcidump(const IntegralHamiltonian &h, int nelec, int ms2) {
    h.validate();
    for (auto &v : h.h1)
        if (std::abs(v.imag()) > 1e-12)
            throw InvalidSpec("FCIDUMP output requires real one-electron integrals");
    std::ostringstream out;
    out << "&FCI NORB=" << h.norb << ",NELEC=" << nelec << ",MS2=" << ms2 << ",\n&END\n";
    char buf[64];
    auto line = [&](double v, int i, int j, int k, int l) {
        // shortest decimal form that parses back to the same double
        for (int p = 1; p <= 17; ++p) {
            std::snprintf(buf, sizeof buf, "%.*g", p, v);
            if (std::strtod(buf, nullptr) == v) break;
        }
        out << buf << ' ' << i << ' ' << j << ' ' << k << ' ' << l << '\n';
    };
    const int L = h.norb;
    for (int a = 1; a <= L; ++a)
        for (int b = 1; b <= a; ++b)
            for (int c = 1; c <= a; ++c)
                for (int e = 1; e <= c; ++e) {
                    if (std::pair{a, b} < std::pair{c, e}) continue;
                    double v = h.g(a - 1, b - 1, c - 1, e - 1);
                    if (v != 0.0) line(v, a, b, c, e);
                }
    for (int a = 1; a <= L; ++a)
        for (int b = 1; b <= a; ++b) {
            double v = h.h(a - 1, b - 1).real();
            if (v != 0.0) line(v, a, b, 0, 0);
        }
    line(h.e_core, 0, 0, 0, 0);
    return out.str();
}

} // namespace fermips
