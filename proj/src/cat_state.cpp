#include "cavcat/cat_state.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "cavcat/error.hpp"

namespace cavcat {

namespace {

constexpr double kMergeTolerance = 1e-12;
constexpr double kInvSqrt2 = 0.70710678118654752440;

// Components of an atom label in the {|0>, |1>} basis.
Eigen::Vector2d atom_vector(AtomLabel l) {
    switch (l) {
    case AtomLabel::zero: return {1.0, 0.0};
    case AtomLabel::one: return {0.0, 1.0};
    case AtomLabel::plus: return {kInvSqrt2, kInvSqrt2};
    case AtomLabel::minus: return {kInvSqrt2, -kInvSqrt2};
    case AtomLabel::none: break;
    }
    throw ConfigError("state has no atom factor");
}

// Exponent of <x|y>, so products of overlaps and kernels can share one exp.
cplx log_overlap(const Eigen::VectorXcd& x, const Eigen::VectorXcd& y) {
    return -0.5 * x.squaredNorm() - 0.5 * y.squaredNorm() + x.dot(y);
}

void require_same_modes(const CatState& a, const CatState& b) {
    if (a.modes() != b.modes()) throw ConfigError("states are defined on different mode lists");
}

std::string fresh_env_label(const std::vector<std::string>& modes) {
    for (std::size_t k = 1;; ++k) {
        std::string label = "env" + std::to_string(k);
        if (std::find(modes.begin(), modes.end(), label) == modes.end()) return label;
    }
}

bool has_atom(const CatState& s) {
    return std::any_of(s.branches().begin(), s.branches().end(),
                       [](const Branch& b) { return b.atom != AtomLabel::none; });
}

} // namespace

std::string to_string(AtomLabel label) {
    switch (label) {
    case AtomLabel::zero: return "0";
    case AtomLabel::one: return "1";
    case AtomLabel::plus: return "+";
    case AtomLabel::minus: return "-";
    case AtomLabel::none: return "none";
    }
    return "none";
}

AtomLabel atom_label_from_string(const std::string& s) {
    if (s == "0") return AtomLabel::zero;
    if (s == "1") return AtomLabel::one;
    if (s == "+") return AtomLabel::plus;
    if (s == "-") return AtomLabel::minus;
    if (s == "none") return AtomLabel::none;
    throw ConfigError("unknown atom label '" + s + "'");
}

std::string to_string(Outcome o) { return o == Outcome::plus ? "+" : "-"; }

double atom_overlap(AtomLabel a, AtomLabel b) {
    if (a == AtomLabel::none || b == AtomLabel::none) {
        if (a == b) return 1.0;
        throw ConfigError("cannot overlap a state with an atom factor against one without");
    }
    return atom_vector(a).dot(atom_vector(b));
}

cplx coherent_overlap(const Eigen::VectorXcd& x, const Eigen::VectorXcd& y) { return std::exp(log_overlap(x, y)); }

CatState::CatState(std::vector<std::string> modes, std::vector<Branch> branches) : modes_(std::move(modes)) {
    for (std::size_t i = 0; i < modes_.size(); ++i)
        for (std::size_t j = i + 1; j < modes_.size(); ++j)
            if (modes_[i] == modes_[j]) throw ConfigError("duplicate mode label '" + modes_[i] + "'");

    double scale = 0.0;
    for (const auto& b : branches) {
        if (b.amplitudes.size() != static_cast<Eigen::Index>(modes_.size()))
            throw ConfigError("branch amplitude count does not match the mode list");
        scale = std::max(scale, std::abs(b.coeff));
    }
    for (auto& b : branches) {
        auto same = std::find_if(branches_.begin(), branches_.end(), [&](const Branch& kept) {
            return kept.atom == b.atom &&
                   (modes_.empty() || (kept.amplitudes - b.amplitudes).cwiseAbs().maxCoeff() <= kMergeTolerance);
        });
        if (same != branches_.end())
            same->coeff += b.coeff;
        else
            branches_.push_back(std::move(b));
    }
    std::erase_if(branches_, [&](const Branch& b) { return std::abs(b.coeff) <= 1e-15 * scale; });
    if (branches_.empty()) throw NumericalError("state has no branches left");
}

CatState CatState::coherent(std::vector<std::string> modes, Eigen::VectorXcd amplitudes, AtomLabel atom) {
    return CatState(std::move(modes), {Branch{1.0, atom, std::move(amplitudes)}});
}

bool CatState::has_mode(const std::string& label) const {
    return std::find(modes_.begin(), modes_.end(), label) != modes_.end();
}

std::size_t CatState::mode_index(const std::string& label) const {
    const auto it = std::find(modes_.begin(), modes_.end(), label);
    if (it == modes_.end()) throw ConfigError("unknown mode '" + label + "'");
    return static_cast<std::size_t>(it - modes_.begin());
}

Eigen::MatrixXcd CatState::gram() const {
    const auto n = static_cast<Eigen::Index>(branches_.size());
    Eigen::MatrixXcd g(n, n);
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index k = 0; k < n; ++k) {
            const Branch& bj = branches_[static_cast<std::size_t>(j)];
            const Branch& bk = branches_[static_cast<std::size_t>(k)];
            g(j, k) = atom_overlap(bj.atom, bk.atom) * coherent_overlap(bj.amplitudes, bk.amplitudes);
        }
    return g;
}

double CatState::norm_squared() const { return overlap(*this, *this).real(); }

CatState CatState::normalized() const {
    const double n2 = norm_squared();
    if (!(n2 > 0.0)) throw NumericalError("cannot normalize a zero state");
    std::vector<Branch> b = branches_;
    for (auto& x : b) x.coeff /= std::sqrt(n2);
    return CatState(modes_, std::move(b));
}

CatState CatState::with_mode(const std::string& label, cplx amplitude) const {
    std::vector<std::string> modes = modes_;
    modes.push_back(label);
    std::vector<Branch> b = branches_;
    for (auto& x : b) {
        x.amplitudes.conservativeResize(x.amplitudes.size() + 1);
        x.amplitudes(x.amplitudes.size() - 1) = amplitude;
    }
    return CatState(std::move(modes), std::move(b));
}

cplx overlap(const CatState& psi, const CatState& phi) {
    require_same_modes(psi, phi);
    cplx sum{};
    for (const auto& bj : psi.branches())
        for (const auto& bk : phi.branches()) {
            const double a = atom_overlap(bj.atom, bk.atom);
            if (a == 0.0) continue;
            sum += std::conj(bj.coeff) * bk.coeff * a * coherent_overlap(bj.amplitudes, bk.amplitudes);
        }
    return sum;
}

double fidelity(const CatState& target, const CatState& state) {
    for (const auto& m : target.modes())
        if (!state.has_mode(m)) throw ConfigError("target mode '" + m + "' is missing from the state");
    CatState padded = target;
    for (const auto& m : state.modes())
        if (!padded.has_mode(m)) padded = padded.with_mode(m);
    // reorder to the mode order of `state`
    std::vector<Branch> b;
    for (const auto& x : padded.branches()) {
        Eigen::VectorXcd amp(static_cast<Eigen::Index>(state.mode_count()));
        for (std::size_t i = 0; i < state.mode_count(); ++i)
            amp(static_cast<Eigen::Index>(i)) = x.amplitudes(static_cast<Eigen::Index>(padded.mode_index(state.modes()[i])));
        b.push_back(Branch{x.coeff, x.atom, std::move(amp)});
    }
    const CatState aligned(state.modes(), std::move(b));
    return std::norm(overlap(aligned, state)) / (aligned.norm_squared() * state.norm_squared());
}

double gram_min_eigenvalue(const CatState& state) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(state.gram(), Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

ReflectionChannel ReflectionChannel::ideal() {
    ReflectionChannel c;
    c.map0_ = Eigen::VectorXcd::Constant(1, -1.0);
    c.map1_ = Eigen::VectorXcd::Constant(1, 1.0);
    return c;
}

ReflectionChannel ReflectionChannel::lossy(double eta) {
    if (!(eta >= 0.0 && eta <= 1.0)) throw ConfigError("loss fraction must lie in [0, 1]");
    ReflectionChannel c = ideal();
    c.eta_ = eta;
    c.map1_(0) = std::sqrt(1.0 - eta);
    return c;
}

ReflectionChannel ReflectionChannel::from_outcome(const ReflectionOutcome& o, bool shapes) {
    const double eta = std::clamp(o.eta, 0.0, 1.0);
    if (!shapes || o.alpha_in == cplx{}) return lossy(eta);

    // Orthonormal basis {f_in, e_1, e_2} of span{f_in, f_out^(0), f_out^(1)}.
    std::vector<ComplexEnvelope> basis{o.f_in};
    auto coords = [&](const ComplexEnvelope& f) {
        Eigen::VectorXcd c(static_cast<Eigen::Index>(basis.size()));
        for (std::size_t i = 0; i < basis.size(); ++i) c(static_cast<Eigen::Index>(i)) = inner_product(basis[i], f);
        return c;
    };
    for (const ComplexEnvelope* f : {&o.f_out_0, &o.f_out_1}) {
        ComplexEnvelope r = *f;
        for (int pass = 0; pass < 2; ++pass) {
            const Eigen::VectorXcd c = coords(r);
            std::vector<cplx> rest(r.samples().begin(), r.samples().end());
            for (std::size_t i = 0; i < basis.size(); ++i)
                for (std::size_t t = 0; t < rest.size(); ++t) rest[t] -= c(static_cast<Eigen::Index>(i)) * basis[i][t];
            r = ComplexEnvelope(f->grid(), std::move(rest));
        }
        const double n2 = r.norm_squared();
        if (n2 > 1e-20) basis.push_back(r.scaled(1.0 / std::sqrt(n2)));
    }

    ReflectionChannel c;
    c.eta_ = eta;
    c.map0_ = coords(o.f_out_0);
    c.map1_ = coords(o.f_out_1) * (o.alpha_out / o.alpha_in);
    return c;
}

bool ReflectionChannel::is_ideal() const noexcept {
    return eta_ == 0.0 && map0_.size() == 1 && map0_(0) == cplx{-1.0} && map1_(0) == cplx{1.0};
}

CatState reflect(const CatState& state, const std::string& mode, const ReflectionChannel& channel) {
    const std::size_t m = state.mode_index(mode);
    const auto extra = channel.map_zero().size() - 1;
    const bool loss = channel.eta() > 0.0;

    std::vector<std::string> modes = state.modes();
    for (Eigen::Index k = 0; k < extra; ++k) modes.push_back(fresh_env_label(modes));
    const std::size_t loss_slot = modes.size();
    if (loss) modes.push_back(fresh_env_label(modes));

    std::vector<Branch> out;
    for (const auto& b : state.branches()) {
        if (b.atom != AtomLabel::zero && b.atom != AtomLabel::one)
            throw ConfigError("reflection needs the atom in |0> or |1> on every branch, found '" + to_string(b.atom) +
                              "'");
        const cplx beta = b.amplitudes(static_cast<Eigen::Index>(m));
        const Eigen::VectorXcd& map = b.atom == AtomLabel::zero ? channel.map_zero() : channel.map_one();
        Eigen::VectorXcd amp = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(modes.size()));
        amp.head(b.amplitudes.size()) = b.amplitudes;
        amp(static_cast<Eigen::Index>(m)) = beta * map(0);
        amp.segment(b.amplitudes.size(), extra) = beta * map.tail(extra);
        if (loss && b.atom == AtomLabel::one) amp(static_cast<Eigen::Index>(loss_slot)) = std::sqrt(channel.eta()) * beta;
        out.push_back(Branch{b.coeff, b.atom, std::move(amp)});
    }
    return CatState(std::move(modes), std::move(out));
}

CatState displace(const CatState& state, const std::string& mode, cplx d) {
    const auto m = static_cast<Eigen::Index>(state.mode_index(mode));
    std::vector<Branch> out = state.branches();
    for (auto& b : out) {
        const cplx beta = b.amplitudes(m);
        b.coeff *= std::exp(0.5 * (d * std::conj(beta) - std::conj(d) * beta));
        b.amplitudes(m) = beta + d;
    }
    return CatState(state.modes(), std::move(out));
}

AtomState AtomState::from_label(AtomLabel label) {
    const Eigen::Vector2d v = atom_vector(label);
    return AtomState{v(0), v(1)};
}

CatState prepare_atom(const CatState& state, const AtomState& target) {
    const double tn = std::norm(target.c0) + std::norm(target.c1);
    if (std::abs(tn - 1.0) > 1e-10) throw ConfigError("target atom state is not normalized");

    // Field factor phi with state = |u> (x) |phi>.
    std::vector<Branch> field;
    if (!has_atom(state)) {
        field = state.branches();
    } else {
        const auto& br = state.branches();
        Eigen::Matrix2cd rho = Eigen::Matrix2cd::Zero();
        for (const auto& bj : br)
            for (const auto& bk : br)
                rho += bj.coeff * std::conj(bk.coeff) * coherent_overlap(bk.amplitudes, bj.amplitudes) *
                       (atom_vector(bj.atom) * atom_vector(bk.atom).transpose()).cast<cplx>();
        const double tr = rho.trace().real();
        if (!(tr > 0.0)) throw NumericalError("cannot prepare the atom of a zero state");
        rho /= tr;
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> es(rho);
        if (1.0 - es.eigenvalues()(1) > 1e-10)
            throw ConfigError("atom is entangled with the field (reduced purity " +
                              std::to_string((rho * rho).trace().real()) + "); measure it first");
        Eigen::Vector2cd u = es.eigenvectors().col(1);
        const Eigen::Index lead = std::abs(u(0)) > 1e-8 ? 0 : 1;
        u *= std::abs(u(lead)) / u(lead);
        for (const auto& b : br) {
            const cplx c = u.dot(atom_vector(b.atom).cast<cplx>());
            field.push_back(Branch{b.coeff * c, AtomLabel::none, b.amplitudes});
        }
    }

    std::vector<Branch> out;
    for (const auto& b : field) {
        if (target.c0 != cplx{}) out.push_back(Branch{b.coeff * target.c0, AtomLabel::zero, b.amplitudes});
        if (target.c1 != cplx{}) out.push_back(Branch{b.coeff * target.c1, AtomLabel::one, b.amplitudes});
    }
    return CatState(state.modes(), std::move(out));
}

const CatState& Measurement::post(Outcome o) const {
    const auto& s = o == Outcome::plus ? post_plus : post_minus;
    if (!s) throw NumericalError("measurement outcome " + to_string(o) + " has zero probability");
    return *s;
}

Measurement measure_atom(const CatState& state) {
    const double total = state.norm_squared();
    Measurement m;
    for (Outcome o : {Outcome::plus, Outcome::minus}) {
        const Eigen::Vector2d v = atom_vector(o == Outcome::plus ? AtomLabel::plus : AtomLabel::minus);
        std::vector<Branch> proj;
        double scale = 0.0;
        for (const auto& b : state.branches()) {
            if (b.atom == AtomLabel::none) throw ConfigError("state has no atom to measure");
            scale = std::max(scale, std::abs(b.coeff));
            const double c = v.dot(atom_vector(b.atom));
            if (c != 0.0) proj.push_back(Branch{b.coeff * c, AtomLabel::none, b.amplitudes});
        }
        double p = 0.0;
        std::optional<CatState> post;
        try {
            if (!proj.empty()) {
                CatState s(state.modes(), std::move(proj));
                p = std::max(s.norm_squared() / total, 0.0);
                if (p > 1e-14) post = s.normalized();
            }
        } catch (const NumericalError&) {
            // every projected branch cancelled
        }
        if (!post) p = 0.0;
        (o == Outcome::plus ? m.p_plus : m.p_minus) = p;
        (o == Outcome::plus ? m.post_plus : m.post_minus) = std::move(post);
    }
    return m;
}

double wigner(const CatState& state, const std::string& mode, cplx z) {
    const auto m = static_cast<Eigen::Index>(state.mode_index(mode));
    const auto& br = state.branches();
    cplx sum{};
    cplx norm{};
    for (const auto& bj : br)
        for (const auto& bk : br) {
            const double a = atom_overlap(bk.atom, bj.atom);
            if (a == 0.0) continue;
            const cplx w = bj.coeff * std::conj(bk.coeff) * a;
            // <beta_k|beta_j> times the cross kernel of |beta_j><beta_k| on `mode`
            const cplx lo = log_overlap(bk.amplitudes, bj.amplitudes);
            const cplx kernel = -2.0 * (z - bj.amplitudes(m)) * (std::conj(z) - std::conj(bk.amplitudes(m)));
            sum += w * std::exp(lo + kernel);
            norm += w * std::exp(lo);
        }
    return 2.0 / std::numbers::pi * sum.real() / norm.real();
}

WignerGrid wigner_grid(const CatState& state, const std::string& mode, double extent, int points) {
    if (points < 2) throw ConfigError("a Wigner grid needs at least 2 points per axis");
    if (!(extent > 0.0)) throw ConfigError("Wigner grid extent must be positive");
    WignerGrid g;
    for (int i = 0; i < points; ++i) {
        const double x = -extent + 2.0 * extent * i / (points - 1);
        g.re.push_back(x);
        g.im.push_back(x);
    }
    g.values.reserve(static_cast<std::size_t>(points) * static_cast<std::size_t>(points));
    for (double x : g.re)
        for (double y : g.im) g.values.push_back(wigner(state, mode, {x, y}));
    return g;
}

} // namespace cavcat
