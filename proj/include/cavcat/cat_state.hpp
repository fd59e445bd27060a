// Superpositions of multimode coherent states entangled with a qubit atom.
//
// A state is sum_k c_k |atom_k> (x) |beta_k>, with |beta_k> a product of coherent
// states over the ordered mode list. Losses are purified into explicit
// environment modes, so every state stays pure and every overlap is closed form.

#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cavcat/pulse.hpp"
#include "cavcat/reflection.hpp"

namespace cavcat {

/// |0>, |1>, |+-> = (|0> +- |1>)/sqrt2, or no atom factor at all.
enum class AtomLabel { zero, one, plus, minus, none };

std::string to_string(AtomLabel label);
AtomLabel atom_label_from_string(const std::string& s);

/// <a|b> for two atom labels; none pairs only with none.
double atom_overlap(AtomLabel a, AtomLabel b);

struct Branch {
    cplx coeff;
    AtomLabel atom = AtomLabel::none;
    Eigen::VectorXcd amplitudes;
};

/// exp(-|x|^2/2 - |y|^2/2 + <x, y>) for multimode coherent amplitudes.
cplx coherent_overlap(const Eigen::VectorXcd& x, const Eigen::VectorXcd& y);

class CatState {
public:
    /// Merges branches with equal atom labels whose amplitudes agree within 1e-12
    /// and drops branches whose coefficient vanishes.
    CatState(std::vector<std::string> modes, std::vector<Branch> branches);

    /// One coherent branch with unit coefficient.
    static CatState coherent(std::vector<std::string> modes, Eigen::VectorXcd amplitudes,
                             AtomLabel atom = AtomLabel::none);

    const std::vector<std::string>& modes() const noexcept { return modes_; }
    const std::vector<Branch>& branches() const noexcept { return branches_; }
    std::size_t mode_count() const noexcept { return modes_.size(); }
    bool has_mode(const std::string& label) const;
    /// Throws ConfigError for an unknown label.
    std::size_t mode_index(const std::string& label) const;

    double norm_squared() const;
    CatState normalized() const;
    /// Tensor product with |amplitude> on a new mode.
    CatState with_mode(const std::string& label, cplx amplitude = {}) const;
    /// Branch Gram matrix G_jk = <atom_j|atom_k> <beta_j|beta_k>, coefficients excluded.
    Eigen::MatrixXcd gram() const;

private:
    std::vector<std::string> modes_;
    std::vector<Branch> branches_;
};

/// <psi|phi>. Throws ConfigError when the mode lists differ.
cplx overlap(const CatState& psi, const CatState& phi);

/// |<target|state>|^2 / (norms), with `target` padded by vacuum on modes it lacks.
double fidelity(const CatState& target, const CatState& state);

/// Smallest eigenvalue of the Gram matrix; >= 0 up to roundoff for any state.
double gram_min_eigenvalue(const CatState& state);

/// Linear map applied by one reflection of a pulse mode off the cavity.
/// The |0> branch always reflects off the empty cavity; the |1> branch off the
/// coupled cavity. Imperfections are carried by fresh environment modes.
class ReflectionChannel {
public:
    /// beta -> -beta on |0>, beta -> beta on |1>.
    static ReflectionChannel ideal();
    /// As ideal, but |1> keeps sqrt(1 - eta) beta and sends sqrt(eta) beta to a loss mode.
    static ReflectionChannel lossy(double eta);
    /// Loss and shape distortion of a simulated reflection, linearized at its
    /// input amplitude. Without `shapes` only the loss is kept.
    static ReflectionChannel from_outcome(const ReflectionOutcome& outcome, bool shapes = true);

    bool is_ideal() const noexcept;
    double eta() const noexcept { return eta_; }
    /// Output coordinates of the |0> and |1> branches per unit input amplitude:
    /// entry 0 on the pulse mode, then one entry per shared distortion mode.
    const Eigen::VectorXcd& map_zero() const noexcept { return map0_; }
    const Eigen::VectorXcd& map_one() const noexcept { return map1_; }

private:
    ReflectionChannel() = default;
    double eta_ = 0.0;
    Eigen::VectorXcd map0_;
    Eigen::VectorXcd map1_;
};

/// Every branch needs atom |0> or |1>.
CatState reflect(const CatState& state, const std::string& mode, const ReflectionChannel& channel);

/// D(d) on one mode: beta -> beta + d with phase exp((d beta* - d* beta)/2).
CatState displace(const CatState& state, const std::string& mode, cplx d);

/// Normalized atom state c0 |0> + c1 |1>.
struct AtomState {
    cplx c0{1.0, 0.0};
    cplx c1{0.0, 0.0};
    static AtomState from_label(AtomLabel label);
};

/// Replaces the atom factor by `target`, expanded into |0> and |1> branches.
/// Throws ConfigError when the atom is entangled with the field.
CatState prepare_atom(const CatState& state, const AtomState& target);

enum class Outcome { plus, minus };
std::string to_string(Outcome o);

struct Measurement {
    double p_plus = 0.0;
    double p_minus = 0.0;
    std::optional<CatState> post_plus;   // normalized, atom label none
    std::optional<CatState> post_minus;

    double probability(Outcome o) const noexcept { return o == Outcome::plus ? p_plus : p_minus; }
    /// Throws NumericalError for a zero-probability outcome.
    const CatState& post(Outcome o) const;
};

/// Projective measurement in {|+>, |->}.
Measurement measure_atom(const CatState& state);

/// Reduced single-mode Wigner function, normalized to integrate to 1.
double wigner(const CatState& state, const std::string& mode, cplx z);

struct WignerGrid {
    std::vector<double> re;
    std::vector<double> im;
    /// values[i * im.size() + j] = W(re[i] + i im[j]).
    std::vector<double> values;
};

/// Square grid of `points` x `points` samples over [-extent, extent]^2.
WignerGrid wigner_grid(const CatState& state, const std::string& mode, double extent, int points);

} // namespace cavcat
