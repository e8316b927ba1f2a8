#ifndef RESIAM_BASIS_HPP
#define RESIAM_BASIS_HPP

#include <string>
#include <utility>
#include <vector>

#include "resiam/rng.hpp"
#include "resiam/tensor.hpp"

namespace resiam {

/// Radial part tau_j(r) = exp(-(r - r_j)^2 / (2 sigma^2)) of the harmonic atoms.
struct RadialProfile {
    int J = 0;
    std::vector<double> ring_centers;
    double sigma = 0.0;

    /// Standard layout: r_j = j-1 for j = 1..J.
    static RadialProfile rings(int J, double sigma = 0.6);

    void validate() const;
    double tau(int j, double r) const;   // j is 1-based
};

/// One sampled circular harmonic psi_jk(r, phi) = tau_j(r) e^{i k phi} on an
/// SxS grid (pixel centers, y up, phi = atan2(dy, dx)), normalized to unit L2.
struct HarmonicAtom {
    int j = 0;
    int k = 0;
    Tensor grid;   // complex [S,S]; imaginary part identically 0 when k = 0
};

class SteerableBasis {
public:
    SteerableBasis() = default;

    int S() const { return s_; }
    int Lambda() const { return lambda_; }
    const RadialProfile& profile() const { return profile_; }
    const std::vector<int>& max_freq() const { return kmax_; }   // K_j, 1-based ring j at [j-1]
    const std::vector<HarmonicAtom>& atoms() const { return atoms_; }
    int atom_count() const { return static_cast<int>(atoms_.size()); }
    const HarmonicAtom& atom(int a) const { return atoms_[static_cast<std::size_t>(a)]; }

    /// Real scalar degrees of freedom per (output, input, offset) triple:
    /// one for each k=0 atom, two for each k>0 atom.
    int dof_per_site() const;

    /// Text manifest (S, Lambda, J, sigma, ring centers, K_j) for weight-file
    /// self-description.
    std::string manifest() const;
    static SteerableBasis from_manifest(const std::string& text);

private:
    friend SteerableBasis build_basis(int S, const RadialProfile& profile, int Lambda);

    int s_ = 0;
    int lambda_ = 0;
    RadialProfile profile_;
    std::vector<int> kmax_;
    std::vector<HarmonicAtom> atoms_;
};

/// Samples every atom (j <= J, 0 <= k <= K_j) with the anti-aliasing caps
/// K_1 = 0 and K_j = min(floor(pi r_j), floor((Lambda-1)/2)); for Lambda = 1
/// only the radial cap applies (there is no rotation group to alias).
SteerableBasis build_basis(int S, const RadialProfile& profile, int Lambda);

/// build_basis with the standard profile: J = (S+1)/2 rings at r_j = j-1, sigma 0.6.
SteerableBasis default_basis(int S, int Lambda);

/// Complex mixing coefficients for one layer: w[chat][c][offset][atom] composes
/// a filter per (output channel, input channel, orientation offset). Lift
/// layers use offsets = 1; group-conv layers use offsets = Lambda.
struct FilterWeights {
    int out_ch = 0;
    int in_ch = 0;
    int offsets = 1;
    Tensor re;                  // [out_ch, in_ch, offsets, atom_count]
    Tensor im;                  // same shape; k=0 slots must stay 0
    std::vector<double> bias;   // out_ch

    void validate(const SteerableBasis& basis) const;
    /// Live scalar parameters (k=0 imaginary slots excluded) plus biases.
    std::size_t param_count(const SteerableBasis& basis) const;
};

FilterWeights zero_filter_weights(int out_ch, int in_ch, int offsets,
                                  const SteerableBasis& basis);
FilterWeights random_filter_weights(Rng& rng, int out_ch, int in_ch, int offsets,
                                    const SteerableBasis& basis);

/// Steer the composed filters to angle theta (Eq: out = Re sum_jk w e^{-ik theta} psi_jk).
/// Returns real kernels [out_ch, in_ch*offsets, S, S] ready for conv2d.
Tensor steer(const FilterWeights& w, const SteerableBasis& basis, double theta);

/// steer at the Lambda group angles 2 pi lambda / Lambda, lambda = 0..Lambda-1.
std::vector<Tensor> filter_bank(const FilterWeights& w, const SteerableBasis& basis);

} // namespace resiam

#endif
