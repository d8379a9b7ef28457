#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <variant>
#include <vector>

#include "idesmc/linalg.hpp"

namespace idesmc {

/// sign with sign(0) = 0, the pointwise simulation selection.
inline double sign0(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

/// Set-valued sign: {1} for y>0, {-1} for y<0, [-1,1] at y=0. Strict sign,
/// no dead-band.
struct Interval {
    double lo, hi;
    bool is_singleton() const { return lo == hi; }
    bool contains(double v) const { return lo <= v && v <= hi; }
};

inline Interval sign_bar(double y) {
    if (y > 0.0) return {1.0, 1.0};
    if (y < 0.0) return {-1.0, -1.0};
    return {-1.0, 1.0};
}

/// Smooth level-set switching surface S = {x : s(x) = 0} with its Jacobian.
struct SwitchingSurface {
    std::function<VectorXd(const VectorXd&)> s;
    std::function<MatrixXd(const VectorXd&)> grad;  // k x n

    /// Linear surface s(x) = Cx.
    static SwitchingSurface linear(const MatrixXd& C) {
        return {[C](const VectorXd& x) { return VectorXd(C * x); },
                [C](const VectorXd&) { return C; }};
    }
};

/// Componentwise relay on top of a continuous part: u = bias(t,x) + L sign(s(x)).
struct RelayLaw {
    std::function<VectorXd(double, const VectorXd&)> bias;  // may be null (zero)
    MatrixXd gains;                                         // L, m x m

    VectorXd bias_at(double t, const VectorXd& x) const {
        return bias ? bias(t, x) : VectorXd(VectorXd::Zero(gains.rows()));
    }
};

/// Unit-vector law u(t, y) = -rho (CB)^{-1} y / ||y||_P with the selection
/// u = 0 at y = 0. The regularized set at y = 0 is the image of the full
/// closed P-ball of radius rho.
struct UnitVectorLaw {
    double rho;
    MatrixXd CB;
    MatrixXd P;

    VectorXd eval(const VectorXd& y) const {
        const double ny = weighted_norm(y, P);
        if (ny == 0.0) return VectorXd::Zero(CB.cols());
        return -rho * CB.inverse() * y / ny;
    }
};

/// Declared-continuous feedback; Filippov regularization leaves it unchanged.
struct ContinuousLaw {
    std::function<VectorXd(double, const VectorXd&)> u;
};

/// Raw closure with no declared structure; regularized sets are unavailable.
struct OpaqueLaw {
    std::function<VectorXd(double, const VectorXd&)> u;
};

using FeedbackLaw = std::variant<RelayLaw, UnitVectorLaw, ContinuousLaw, OpaqueLaw>;

/// Affine-in-control field  f(t,x) = a(t,x) + b(t,x) u(t,x)  with a relay /
/// unit-vector / continuous feedback switching on a smooth level set.
/// Immutable closures over constant data; safe for concurrent read.
struct PiecewiseAffineField {
    std::function<VectorXd(double, const VectorXd&)> a;
    std::function<MatrixXd(double, const VectorXd&)> b;  // n x m
    FeedbackLaw feedback;
    SwitchingSurface surface;

    /// Scale-aware on-surface tolerance.
    static double surface_tol(const VectorXd& x) { return 1e-8 * (1.0 + x.norm()); }

    bool on_surface(const VectorXd& x) const {
        return surface.s(x).norm() <= surface_tol(x);
    }

    VectorXd input(double t, const VectorXd& x) const {
        if (const auto* r = std::get_if<RelayLaw>(&feedback)) {
            const VectorXd sx = surface.s(x);
            VectorXd sg(sx.size());
            for (int i = 0; i < sx.size(); ++i) sg(i) = sign0(sx(i));
            return r->bias_at(t, x) + r->gains * sg;
        }
        if (const auto* uv = std::get_if<UnitVectorLaw>(&feedback))
            return uv->eval(surface.s(x));
        if (const auto* c = std::get_if<ContinuousLaw>(&feedback)) return c->u(t, x);
        return std::get<OpaqueLaw>(feedback).u(t, x);
    }

    VectorXd value(double t, const VectorXd& x) const {
        return a(t, x) + b(t, x) * input(t, x);
    }
};

/// Description of the Filippov set K[f](t,x) for affine fields: a singleton at
/// continuity points, otherwise a + b U with U the first-kind vertex hull
/// (componentwise relays; the second-kind box is carried alongside) or the
/// image of the closed P-ball (unit-vector law at y = 0).
struct ConvexSetDescription {
    enum class Kind { kSingleton, kVertexHull, kBall };
    Kind kind = Kind::kSingleton;

    VectorXd point;  // singleton value

    // vertex hull (first kind) and its enclosing box (second kind)
    std::vector<VectorXd> vertices;   // images a + b(bias + L v), v in {-1,0,1}^m
    VectorXd box_offset;              // a + b bias (+ fixed relay components)
    MatrixXd box_generators;          // columns b L e_j over active components

    // ball: { offset + map v : ||v||_P <= radius }
    VectorXd ball_offset;
    MatrixXd ball_map;
    MatrixXd ball_P;
    double ball_radius = 0.0;
};

inline ConvexSetDescription filippov_set(const PiecewiseAffineField& field, double t,
                                         const VectorXd& x) {
    ConvexSetDescription d;
    if (std::holds_alternative<OpaqueLaw>(field.feedback))
        throw std::invalid_argument("filippov_set: unsupported feedback (no declared structure)");
    if (std::holds_alternative<ContinuousLaw>(field.feedback) || !field.on_surface(x)) {
        d.kind = ConvexSetDescription::Kind::kSingleton;
        d.point = field.value(t, x);
        return d;
    }
    const VectorXd a = field.a(t, x);
    const MatrixXd b = field.b(t, x);
    const VectorXd sx = field.surface.s(x);
    const double tol = PiecewiseAffineField::surface_tol(x);

    if (const auto* uv = std::get_if<UnitVectorLaw>(&field.feedback)) {
        d.kind = ConvexSetDescription::Kind::kBall;
        d.ball_offset = a;
        d.ball_map = -b * uv->CB.inverse();
        d.ball_P = uv->P;
        d.ball_radius = uv->rho;
        return d;
    }
    const auto& relay = std::get<RelayLaw>(field.feedback);
    const int m = static_cast<int>(relay.gains.cols());
    std::vector<int> active;  // components with s_j ~ 0
    VectorXd fixed_sign(m);
    for (int j = 0; j < m && j < sx.size(); ++j) {
        if (std::abs(sx(j)) <= tol) {
            active.push_back(j);
            fixed_sign(j) = 0.0;
        } else {
            fixed_sign(j) = sign0(sx(j));
        }
    }
    const VectorXd base = a + b * (relay.bias_at(t, x) + relay.gains * fixed_sign);
    if (active.empty()) {
        d.kind = ConvexSetDescription::Kind::kSingleton;
        d.point = base;
        return d;
    }
    d.kind = ConvexSetDescription::Kind::kVertexHull;
    d.box_offset = base;
    d.box_generators.resize(a.size(), static_cast<long>(active.size()));
    for (size_t c = 0; c < active.size(); ++c)
        d.box_generators.col(static_cast<long>(c)) = b * relay.gains.col(active[c]);
    const size_t nv = size_t{1} << active.size();
    d.vertices.reserve(nv);
    for (size_t mask = 0; mask < nv; ++mask) {
        VectorXd v = base;
        for (size_t c = 0; c < active.size(); ++c)
            v += ((mask >> c) & 1 ? 1.0 : -1.0) * d.box_generators.col(static_cast<long>(c));
        d.vertices.push_back(v);
    }
    return d;
}

/// Equivalent control on the surface: the solution of grad_s (a + b u) = 0,
///   u_eq = -(grad_s b)^{-1} grad_s a.
inline VectorXd equivalent_control_algebraic(const PiecewiseAffineField& field, double t,
                                             const VectorXd& x) {
    const VectorXd sx = field.surface.s(x);
    if (sx.norm() > PiecewiseAffineField::surface_tol(x))
        throw std::domain_error("equivalent_control_algebraic: x is off the surface");
    const MatrixXd G = field.surface.grad(x) * field.b(t, x);
    if (G.rows() != G.cols())
        throw std::invalid_argument("equivalent_control_algebraic: grad_s b must be square");
    if (std::abs(G.determinant()) < 1e-12)
        throw std::runtime_error("equivalent_control_algebraic: grad_s b is singular");
    return -G.inverse() * (field.surface.grad(x) * field.a(t, x));
}

/// Admissible input set U(t,x) used by the sliding test: a componentwise box
/// or the P-ball of the unit-vector law.
struct AdmissibleSet {
    enum class Kind { kBox, kBall };
    Kind kind = Kind::kBox;
    VectorXd lo, hi;  // box bounds
    MatrixXd CB, P;   // ball: ||CB u||_P <= rho
    double rho = 0.0;

    static AdmissibleSet box(const VectorXd& lo, const VectorXd& hi) {
        AdmissibleSet s;
        s.kind = Kind::kBox;
        s.lo = lo;
        s.hi = hi;
        return s;
    }
    static AdmissibleSet ball(const MatrixXd& CB, const MatrixXd& P, double rho) {
        AdmissibleSet s;
        s.kind = Kind::kBall;
        s.CB = CB;
        s.P = P;
        s.rho = rho;
        return s;
    }
    static AdmissibleSet from_law(const FeedbackLaw& law, double t, const VectorXd& x);

    /// Signed margin to the boundary, normalized by the set radius:
    /// positive strictly inside, negative outside.
    double margin(const VectorXd& u) const {
        if (kind == Kind::kBox) {
            double m = std::numeric_limits<double>::infinity();
            for (int j = 0; j < u.size(); ++j) {
                const double r = 0.5 * (hi(j) - lo(j));
                if (r <= 0.0) return u(j) == lo(j) ? 0.0 : -1.0;
                m = std::min(m, (std::min(hi(j) - u(j), u(j) - lo(j))) / r);
            }
            return m;
        }
        const double r = weighted_norm(CB * u, P);
        return (rho - r) / rho;
    }
};

inline AdmissibleSet AdmissibleSet::from_law(const FeedbackLaw& law, double t,
                                             const VectorXd& x) {
    if (const auto* relay = std::get_if<RelayLaw>(&law)) {
        const VectorXd bias = relay->bias_at(t, x);
        const int m = static_cast<int>(relay->gains.cols());
        VectorXd lo(m), hi(m);
        for (int j = 0; j < m; ++j) {
            // componentwise relay box: bias_j + [-|row reach|, |row reach|]
            double reach = relay->gains.row(j).cwiseAbs().sum();
            lo(j) = bias(j) - reach;
            hi(j) = bias(j) + reach;
        }
        return box(lo, hi);
    }
    if (const auto* uv = std::get_if<UnitVectorLaw>(&law))
        return ball(uv->CB, uv->P, uv->rho);
    throw std::invalid_argument("AdmissibleSet: feedback has no regularized set");
}

struct SlidingStatus {
    enum class Kind { kNoSliding, kSliding, kAmbiguous };
    Kind kind;
    VectorXd f0;    // sliding dynamics a + b u_eq when kind == kSliding
    VectorXd u_eq;  // always reported
    double margin;  // normalized distance of u_eq to the admissible boundary
};

/// Singleton test F_S = K[f] cap C_S on a regular smooth level set: the
/// tangent cone is the null space of grad_s, so sliding holds exactly when
/// the equivalent control is admissible.
inline SlidingStatus sliding_status(const PiecewiseAffineField& field, double t,
                                    const VectorXd& x, const AdmissibleSet& U,
                                    double boundary_band = 1e-6) {
    SlidingStatus st;
    st.u_eq = equivalent_control_algebraic(field, t, x);
    st.margin = U.margin(st.u_eq);
    if (st.margin > boundary_band) {
        st.kind = SlidingStatus::Kind::kSliding;
        st.f0 = field.a(t, x) + field.b(t, x) * st.u_eq;
    } else if (st.margin < -boundary_band) {
        st.kind = SlidingStatus::Kind::kNoSliding;
    } else {
        st.kind = SlidingStatus::Kind::kAmbiguous;
    }
    return st;
}

inline SlidingStatus sliding_status(const PiecewiseAffineField& field, double t,
                                    const VectorXd& x) {
    return sliding_status(field, t, x, AdmissibleSet::from_law(field.feedback, t, x));
}

}  // namespace idesmc
