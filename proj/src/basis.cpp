#include "resiam/basis.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace resiam {

namespace {

// Smooth radial edge mask: 1 up to S/2 - 1, cos^2 ramp, 0 from S/2 outward.
// Radially symmetric, so it commutes with rotation and keeps atoms steerable.
double edge_mask(double r, int S) {
    const double hi = 0.5 * S;
    const double lo = hi - 1.0;
    if (r <= lo) return 1.0;
    if (r >= hi) return 0.0;
    const double c = std::cos(0.5 * M_PI * (r - lo));
    return c * c;
}

int radial_cap(double r_j) { return static_cast<int>(std::floor(M_PI * r_j)); }

} // namespace

RadialProfile RadialProfile::rings(int J, double sigma) {
    RadialProfile p;
    p.J = J;
    p.sigma = sigma;
    for (int j = 1; j <= J; ++j) p.ring_centers.push_back(j - 1.0);
    p.validate();
    return p;
}

void RadialProfile::validate() const {
    if (J < 1 || static_cast<int>(ring_centers.size()) != J) {
        throw std::invalid_argument("RadialProfile: need J >= 1 ring centers, got J=" +
                                    std::to_string(J) + " with " +
                                    std::to_string(ring_centers.size()) + " centers");
    }
    if (ring_centers.front() != 0.0) {
        throw std::invalid_argument("RadialProfile: first ring must sit at r = 0");
    }
    for (int j = 1; j < J; ++j) {
        if (ring_centers[static_cast<std::size_t>(j)] <= ring_centers[static_cast<std::size_t>(j - 1)]) {
            throw std::invalid_argument("RadialProfile: ring centers must be strictly increasing");
        }
    }
    if (!(sigma > 0.0)) {
        throw std::invalid_argument("RadialProfile: sigma must be positive");
    }
}

double RadialProfile::tau(int j, double r) const {
    const double d = r - ring_centers[static_cast<std::size_t>(j - 1)];
    return std::exp(-d * d / (2.0 * sigma * sigma));
}

SteerableBasis build_basis(int S, const RadialProfile& profile, int Lambda) {
    if (S < 1 || S % 2 == 0) {
        throw std::invalid_argument("build_basis: kernel size must be odd and positive, got " +
                                    std::to_string(S));
    }
    if (Lambda < 1) {
        throw std::invalid_argument("build_basis: Lambda must be >= 1, got " +
                                    std::to_string(Lambda));
    }
    profile.validate();

    SteerableBasis b;
    b.s_ = S;
    b.lambda_ = Lambda;
    b.profile_ = profile;

    const int group_cap = (Lambda - 1) / 2;
    for (int j = 1; j <= profile.J; ++j) {
        const double rj = profile.ring_centers[static_cast<std::size_t>(j - 1)];
        int K = (j == 1) ? 0 : radial_cap(rj);
        if (Lambda >= 2) K = std::min(K, group_cap);
        b.kmax_.push_back(K);
    }

    const double c = 0.5 * (S - 1);
    for (int j = 1; j <= profile.J; ++j) {
        for (int k = 0; k <= b.kmax_[static_cast<std::size_t>(j - 1)]; ++k) {
            Tensor grid = Tensor::zeros_complex({S, S});
            double norm2 = 0.0;
            for (int y = 0; y < S; ++y) {
                for (int x = 0; x < S; ++x) {
                    const double dx = x - c, dy = c - y;   // math coords, y up
                    const double r = std::hypot(dx, dy);
                    double re = 0.0, im = 0.0;
                    if (r == 0.0) {
                        // phi is undefined at the center; the continuous
                        // harmonic vanishes there for k > 0
                        if (k == 0) re = profile.tau(j, 0.0);
                    } else {
                        const double a = edge_mask(r, S) * profile.tau(j, r);
                        const double phi = std::atan2(dy, dx);
                        re = a * std::cos(k * phi);
                        im = (k == 0) ? 0.0 : a * std::sin(k * phi);
                    }
                    grid.set_c({re, im}, y, x);
                    norm2 += re * re + im * im;
                }
            }
            if (norm2 <= 0.0) {
                throw std::logic_error("build_basis: atom (j=" + std::to_string(j) +
                                       ", k=" + std::to_string(k) + ") vanished for S=" +
                                       std::to_string(S));
            }
            const double inv = 1.0 / std::sqrt(norm2);
            for (double& v : grid.storage()) v *= inv;
            b.atoms_.push_back({j, k, std::move(grid)});
        }
    }
    return b;
}

SteerableBasis default_basis(int S, int Lambda) {
    return build_basis(S, RadialProfile::rings((S + 1) / 2), Lambda);
}

int SteerableBasis::dof_per_site() const {
    int d = 0;
    for (const auto& a : atoms_) d += (a.k == 0) ? 1 : 2;
    return d;
}

std::string SteerableBasis::manifest() const {
    std::ostringstream os;
    os << "steerable-basis v1\n";
    os << "S " << s_ << "\n";
    os << "Lambda " << lambda_ << "\n";
    os << "J " << profile_.J << "\n";
    os << "sigma " << profile_.sigma << "\n";
    os << "rings";
    for (double r : profile_.ring_centers) os << ' ' << r;
    os << "\nK";
    for (int k : kmax_) os << ' ' << k;
    os << "\n";
    return os.str();
}

SteerableBasis SteerableBasis::from_manifest(const std::string& text) {
    std::istringstream is(text);
    std::string header;
    std::getline(is, header);
    if (header != "steerable-basis v1") {
        throw std::invalid_argument("basis manifest: unrecognized header '" + header + "'");
    }
    int S = 0, Lambda = 0;
    RadialProfile profile;
    std::vector<int> K;
    std::string key;
    while (is >> key) {
        if (key == "S") is >> S;
        else if (key == "Lambda") is >> Lambda;
        else if (key == "J") is >> profile.J;
        else if (key == "sigma") is >> profile.sigma;
        else if (key == "rings") {
            profile.ring_centers.resize(static_cast<std::size_t>(profile.J));
            for (double& r : profile.ring_centers) is >> r;
        } else if (key == "K") {
            K.resize(static_cast<std::size_t>(profile.J));
            for (int& k : K) is >> k;
        } else {
            throw std::invalid_argument("basis manifest: unknown key '" + key + "'");
        }
    }
    if (!is.eof() || S == 0 || Lambda == 0 || profile.J == 0) {
        throw std::invalid_argument("basis manifest: truncated or malformed");
    }
    SteerableBasis b = build_basis(S, profile, Lambda);
    if (b.kmax_ != K) {
        std::ostringstream os;
        os << "basis manifest: stored frequency caps differ from the reconstruction;"
              " stored";
        for (int k : K) os << ' ' << k;
        os << ", rebuilt";
        for (int k : b.kmax_) os << ' ' << k;
        throw std::invalid_argument(os.str());
    }
    return b;
}

void FilterWeights::validate(const SteerableBasis& basis) const {
    const std::vector<int> want = {out_ch, in_ch, offsets, basis.atom_count()};
    if (out_ch < 1 || in_ch < 1 || offsets < 1) {
        throw std::invalid_argument("FilterWeights: channel/offset counts must be positive");
    }
    if (re.shape() != want || im.shape() != want) {
        throw std::invalid_argument("FilterWeights: coefficient shape " + re.shape_str() +
                                    "/" + im.shape_str() + " does not match layer (" +
                                    std::to_string(out_ch) + "," + std::to_string(in_ch) + "," +
                                    std::to_string(offsets) + ") with " +
                                    std::to_string(basis.atom_count()) + " atoms");
    }
    if (static_cast<int>(bias.size()) != out_ch) {
        throw std::invalid_argument("FilterWeights: bias count " + std::to_string(bias.size()) +
                                    " does not match out_ch " + std::to_string(out_ch));
    }
    const int A = basis.atom_count();
    for (int a = 0; a < A; ++a) {
        if (basis.atom(a).k != 0) continue;
        for (int co = 0; co < out_ch; ++co)
            for (int ci = 0; ci < in_ch; ++ci)
                for (int o = 0; o < offsets; ++o)
                    if (im.at(co, ci, o, a) != 0.0) {
                        throw std::invalid_argument(
                            "FilterWeights: k=0 coefficients must be real (atom " +
                            std::to_string(a) + ")");
                    }
    }
}

std::size_t FilterWeights::param_count(const SteerableBasis& basis) const {
    return static_cast<std::size_t>(out_ch) * in_ch * offsets * basis.dof_per_site() +
           static_cast<std::size_t>(out_ch);
}

FilterWeights zero_filter_weights(int out_ch, int in_ch, int offsets,
                                  const SteerableBasis& basis) {
    FilterWeights w;
    w.out_ch = out_ch;
    w.in_ch = in_ch;
    w.offsets = offsets;
    w.re = Tensor::zeros({out_ch, in_ch, offsets, basis.atom_count()});
    w.im = Tensor::zeros_like(w.re);
    w.bias.assign(static_cast<std::size_t>(out_ch), 0.0);
    return w;
}

FilterWeights random_filter_weights(Rng& rng, int out_ch, int in_ch, int offsets,
                                    const SteerableBasis& basis) {
    FilterWeights w = zero_filter_weights(out_ch, in_ch, offsets, basis);
    const double stddev = std::sqrt(2.0 / (static_cast<double>(in_ch) * offsets *
                                           basis.dof_per_site()));
    const int A = basis.atom_count();
    for (int co = 0; co < out_ch; ++co)
        for (int ci = 0; ci < in_ch; ++ci)
            for (int o = 0; o < offsets; ++o)
                for (int a = 0; a < A; ++a) {
                    w.re.at(co, ci, o, a) = stddev * rng.gaussian();
                    if (basis.atom(a).k != 0) {
                        w.im.at(co, ci, o, a) = stddev * rng.gaussian();
                    }
                }
    return w;
}

Tensor steer(const FilterWeights& w, const SteerableBasis& basis, double theta) {
    w.validate(basis);
    const double th = std::remainder(theta, 2.0 * M_PI);
    const int S = basis.S(), A = basis.atom_count();
    Tensor out = Tensor::zeros({w.out_ch, w.in_ch * w.offsets, S, S});

    // per-atom phase e^{-ik theta}
    std::vector<double> pre(static_cast<std::size_t>(A)), pim(static_cast<std::size_t>(A));
    for (int a = 0; a < A; ++a) {
        const int k = basis.atom(a).k;
        pre[static_cast<std::size_t>(a)] = std::cos(k * th);
        pim[static_cast<std::size_t>(a)] = -std::sin(k * th);
    }

    const std::size_t plane = static_cast<std::size_t>(S) * S;
    for (int co = 0; co < w.out_ch; ++co)
        for (int ci = 0; ci < w.in_ch; ++ci)
            for (int o = 0; o < w.offsets; ++o) {
                double* dst = out.raw() +
                              ((static_cast<std::size_t>(co) * w.in_ch + ci) * w.offsets + o) * plane;
                for (int a = 0; a < A; ++a) {
                    const double wre = w.re.at(co, ci, o, a);
                    const double wim = w.im.at(co, ci, o, a);
                    // (w * e^{-ik theta}), then Re(coeff * psi)
                    const double cre = wre * pre[static_cast<std::size_t>(a)] -
                                       wim * pim[static_cast<std::size_t>(a)];
                    const double cim = wre * pim[static_cast<std::size_t>(a)] +
                                       wim * pre[static_cast<std::size_t>(a)];
                    const double* g = basis.atom(a).grid.raw();
                    for (std::size_t i = 0; i < plane; ++i) {
                        dst[i] += cre * g[2 * i] - cim * g[2 * i + 1];
                    }
                }
            }
    return out;
}

std::vector<Tensor> filter_bank(const FilterWeights& w, const SteerableBasis& basis) {
    std::vector<Tensor> bank;
    bank.reserve(static_cast<std::size_t>(basis.Lambda()));
    for (int lam = 0; lam < basis.Lambda(); ++lam) {
        bank.push_back(steer(w, basis, 2.0 * M_PI * lam / basis.Lambda()));
    }
    return bank;
}

} // namespace resiam
