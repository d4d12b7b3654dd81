#include <cmath>

#include "fermips/engines.hpp"

namespace fermips {

std::vector<AutocorrPoint> current_autocorrelation(const MPOOperator &h, const MPOOperator &j,
                                                   const MPSWavefunction &psi0, double e0,
                                                   const EvolutionParams &p, double t_max) {
    p.validate();
    if (t_max <= 0) throw InvalidSpec("t_max must be positive");
    const int n = std::max(1, static_cast<int>(std::llround(t_max / p.dt)));
    const double dt = t_max / n;

    auto jpsi = apply_fit(j, psi0, p.policy);
    std::vector<AutocorrPoint> series;
    series.reserve(n + 1);
    series.push_back({0.0, overlap(jpsi, jpsi)});
    if (jpsi.norm() == 0.0) {
        for (int k = 1; k <= n; ++k) series.push_back({k * dt, cplx{0}});
        return series;
    }
    EvolutionParams q = p;
    q.dt = dt;
    q.n_steps = 1;
    q.imaginary = false;
    q.normalize_each_step = false;
    MPSWavefunction phi = jpsi;
    for (int k = 1; k <= n; ++k) {
        phi = evolve(h, phi, q).psi;
        double tau = k * dt;
        series.push_back({tau, std::exp(cplx(0.0, e0 * tau)) * overlap(jpsi, phi)});
    }
    return series;
}

std::vector<std::pair<double, double>> optical_spectrum(const std::vector<AutocorrPoint> &series,
                                                        double gamma, SpectrumWindow window,
                                                        const std::vector<double> &omega_grid,
                                                        int n_sites) {
    if (series.size() < 2) throw NonuniformGrid("need at least two autocorrelation samples");
    if (n_sites < 1) throw InvalidSpec("n_sites must be positive");
    const double dtau = series[1].tau - series[0].tau;
    if (dtau <= 0) throw NonuniformGrid("tau grid must be increasing");
    for (std::size_t k = 1; k < series.size(); ++k)
        if (std::abs(series[k].tau - series[k - 1].tau - dtau) > 1e-9 * dtau)
            throw NonuniformGrid("tau grid must be uniform");
    const double t_max = series.back().tau;

    std::vector<std::pair<double, double>> out;
    out.reserve(omega_grid.size());
    for (double omega : omega_grid) {
        cplx acc{0};
        for (std::size_t k = 0; k < series.size(); ++k) {
            double tau = series[k].tau;
            double w = (window == SpectrumWindow::cosine)
                           ? std::cos(M_PI * tau / (2.0 * t_max))
                           : 1.0;
            cplx term = std::exp(cplx(-gamma * tau, omega * tau)) * w * series[k].c;
            double trap = (k == 0 || k + 1 == series.size()) ? 0.5 : 1.0;
            acc += trap * term;
        }
        out.push_back({omega, std::real(acc) * dtau / n_sites});
    }
    return out;
}

} // namespace fermips
