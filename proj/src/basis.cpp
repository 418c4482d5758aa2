#include "acds/basis.hpp"

#include <algorithm>
#include <set>

namespace acds::basis {

namespace {

// Multisets of `order` directions out of p, sorted by number of distinct
// directions and then lexicographically: x1x1, x2x2, x1x2 for order 2, p = 2.
std::vector<MultiIndex> derivative_patterns(int p, int order)
{
    std::vector<std::vector<int>> combos;
    std::vector<int> cur;
    auto rec = [&](auto&& self, int start) -> void {
        if (static_cast<int>(cur.size()) == order) {
            combos.push_back(cur);
            return;
        }
        for (int s = start; s < p; ++s) {
            cur.push_back(s);
            self(self, s);
            cur.pop_back();
        }
    };
    rec(rec, 0);
    auto distinct = [](const std::vector<int>& c) {
        return std::set<int>(c.begin(), c.end()).size();
    };
    std::stable_sort(combos.begin(), combos.end(),
                     [&](const auto& a, const auto& b) { return distinct(a) < distinct(b); });
    std::vector<MultiIndex> out;
    for (const auto& c : combos) {
        MultiIndex alpha(static_cast<std::size_t>(p), 0);
        for (int s : c) {
            ++alpha[static_cast<std::size_t>(s)];
        }
        out.push_back(alpha);
    }
    return out;
}

// Sorted index multisets of size `degree` over n atoms, lexicographic.
void combinations_with_replacement(int n, int degree, std::vector<std::vector<int>>& out)
{
    std::vector<int> cur;
    auto rec = [&](auto&& self, int start) -> void {
        if (static_cast<int>(cur.size()) == degree) {
            out.push_back(cur);
            return;
        }
        for (int a = start; a < n; ++a) {
            cur.push_back(a);
            self(self, a);
            cur.pop_back();
        }
    };
    rec(rec, 0);
}

std::string field_name(int r, int d)
{
    return d == 1 ? std::string("u") : "u" + std::to_string(r + 1);
}

} // namespace

Atom Atom::coordinate(int s, int p)
{
    (void)p;
    return Atom{Kind::Coordinate, s, {}};
}

Atom Atom::state(int r, int p)
{
    return Atom{Kind::Field, r, MultiIndex(static_cast<std::size_t>(p), 0)};
}

Atom Atom::derivative(int r, MultiIndex alpha)
{
    return Atom{Kind::Field, r, std::move(alpha)};
}

std::string Atom::name(int p, int d) const
{
    (void)p;
    if (kind == Kind::Coordinate) {
        return "x" + std::to_string(index + 1);
    }
    std::string out = field_name(index, d);
    if (derivative_order() == 0) {
        return out;
    }
    out += "_";
    // Pure powers first in direction order, then mixed: u_x1x1, u_x1x2.
    for (std::size_t s = 0; s < alpha.size(); ++s) {
        for (int k = 0; k < alpha[s]; ++k) {
            out += "x" + std::to_string(s + 1);
        }
    }
    return out;
}

BasisLibrary::BasisLibrary(int p, int d, std::vector<Atom> atoms, std::vector<std::vector<int>> factor_lists)
    : p_(p), d_(d), atoms_(std::move(atoms))
{
    if (p < 1 || d < 1) {
        throw DimensionError("BasisLibrary: p and d must be >= 1");
    }
    for (const auto& a : atoms_) {
        if (a.kind == Atom::Kind::Coordinate && (a.index < 0 || a.index >= p)) {
            throw DimensionError("BasisLibrary: coordinate atom out of range");
        }
        if (a.kind == Atom::Kind::Field &&
            (a.index < 0 || a.index >= d || static_cast<int>(a.alpha.size()) != p)) {
            throw DimensionError("BasisLibrary: field atom out of range");
        }
    }
    std::set<std::vector<int>> seen;
    for (auto& factors : factor_lists) {
        std::sort(factors.begin(), factors.end());
        for (int f : factors) {
            if (f < 0 || f >= static_cast<int>(atoms_.size())) {
                throw DimensionError("BasisLibrary: factor refers to unknown atom");
            }
        }
        if (!seen.insert(factors).second) {
            throw std::invalid_argument("BasisLibrary: duplicate basis term");
        }
        BasisTerm t;
        t.factors = factors;
        if (factors.empty()) {
            t.display_name = "1";
        } else {
            for (std::size_t i = 0; i < factors.size(); ++i) {
                if (i > 0) {
                    t.display_name += "*";
                }
                t.display_name += atoms_[static_cast<std::size_t>(factors[i])].name(p_, d_);
            }
        }
        terms_.push_back(std::move(t));
    }
}

int BasisLibrary::max_derivative_order() const
{
    int out = 0;
    for (const auto& t : terms_) {
        for (int f : t.factors) {
            out = std::max(out, atoms_[static_cast<std::size_t>(f)].derivative_order());
        }
    }
    return out;
}

Index BasisLibrary::index_of(const std::string& name) const
{
    for (std::size_t i = 0; i < terms_.size(); ++i) {
        if (terms_[i].display_name == name) {
            return static_cast<Index>(i);
        }
    }
    return -1;
}

std::vector<std::string> BasisLibrary::names() const
{
    std::vector<std::string> out;
    out.reserve(terms_.size());
    for (const auto& t : terms_) {
        out.push_back(t.display_name);
    }
    return out;
}

BasisLibrary build_library(int p, int d, int k1, int k2, bool include_coords)
{
    if (k1 < 1 || k2 < 0) {
        throw std::invalid_argument("build_library: need k1 >= 1 and k2 >= 0");
    }
    std::vector<Atom> atoms;
    if (include_coords) {
        for (int s = 0; s < p; ++s) {
            atoms.push_back(Atom::coordinate(s, p));
        }
    }
    for (int order = 0; order <= k2; ++order) {
        for (const auto& alpha : derivative_patterns(p, order)) {
            for (int r = 0; r < d; ++r) {
                atoms.push_back(Atom::derivative(r, alpha));
            }
        }
    }
    std::vector<std::vector<int>> factors{{}};
    for (int degree = 1; degree <= k1; ++degree) {
        combinations_with_replacement(static_cast<int>(atoms.size()), degree, factors);
    }
    return BasisLibrary(p, d, std::move(atoms), std::move(factors));
}

BasisLibrary build_monomial_library(int d, int max_degree, int p)
{
    if (max_degree < 1) {
        throw std::invalid_argument("build_monomial_library: max_degree must be >= 1");
    }
    std::vector<Atom> atoms;
    for (int r = 0; r < d; ++r) {
        atoms.push_back(Atom::state(r, p));
    }
    std::vector<std::vector<int>> factors{{}};
    for (int degree = 1; degree <= max_degree; ++degree) {
        combinations_with_replacement(d, degree, factors);
    }
    return BasisLibrary(p, d, std::move(atoms), std::move(factors));
}

BasisLibrary burgers_library()
{
    std::vector<Atom> atoms{Atom::state(0, 1), Atom::derivative(0, {1}), Atom::derivative(0, {2})};
    constexpr int u = 0;
    constexpr int ux = 1;
    constexpr int uxx = 2;
    std::vector<std::vector<int>> factors{
        {},          {u},          {u, u},        {u, u, u},       {ux},           {ux, ux},   {ux, ux, ux},
        {u, ux},     {u, u, ux},   {u, ux, ux},   {uxx},           {uxx, uxx},     {uxx, uxx, uxx},
        {u, uxx},    {u, u, uxx},  {u, uxx, uxx}, {ux, uxx},       {ux, ux, uxx},  {ux, uxx, uxx},
        {u, ux, uxx}};
    return BasisLibrary(1, 1, std::move(atoms), std::move(factors));
}

namespace {

Eigen::VectorXd products(const BasisLibrary& lib, const Eigen::VectorXd& atom_values)
{
    Eigen::VectorXd row(lib.size());
    for (Index i = 0; i < lib.size(); ++i) {
        double v = 1.0;
        for (int f : lib.term(i).factors) {
            v *= atom_values[f];
        }
        row[i] = v;
    }
    return row;
}

double surrogate_atom(const Atom& atom, const gp::SurrogateValues& sv)
{
    const int order = atom.derivative_order();
    if (order == 0) {
        return sv.value;
    }
    std::vector<Index> dirs;
    for (std::size_t s = 0; s < atom.alpha.size(); ++s) {
        for (int k = 0; k < atom.alpha[s]; ++k) {
            dirs.push_back(static_cast<Index>(s));
        }
    }
    if (order == 1) {
        return sv.gradient[dirs[0]];
    }
    return sv.hessian(dirs[0], dirs[1]);
}

void surrogate_row(const BasisLibrary& lib, std::span<const gp::GpModel> models,
                   const Eigen::Ref<const Eigen::VectorXd>& query, Eigen::Ref<Eigen::VectorXd> out)
{
    std::vector<gp::SurrogateValues> values;
    values.reserve(models.size());
    for (const auto& m : models) {
        values.push_back(gp::evaluate(m, query));
    }
    Eigen::VectorXd atom_values(static_cast<Index>(lib.atoms().size()));
    for (std::size_t a = 0; a < lib.atoms().size(); ++a) {
        const Atom& atom = lib.atoms()[a];
        atom_values[static_cast<Index>(a)] =
            atom.kind == Atom::Kind::Coordinate
                ? query[atom.index]
                : surrogate_atom(atom, values[static_cast<std::size_t>(atom.index)]);
    }
    out = products(lib, atom_values);
}

void check_surrogate_capability(const BasisLibrary& lib, std::span<const gp::GpModel> models, Index p)
{
    if (lib.max_derivative_order() > 2) {
        throw CapabilityError("eval_from_surrogate: GP derivatives are available up to order 2");
    }
    if (static_cast<int>(models.size()) != lib.d()) {
        throw DimensionError("eval_from_surrogate: need one GP model per state dimension");
    }
    if (p != lib.p()) {
        throw DimensionError("eval_from_surrogate: query dimension mismatch");
    }
    for (const auto& m : models) {
        if (m.dim() != lib.p()) {
            throw DimensionError("eval_from_surrogate: GP input dimension mismatch");
        }
    }
}

} // namespace

Eigen::VectorXd eval_from_observation(const BasisLibrary& lib, const Observation& obs)
{
    if (obs.point.dim() != lib.p()) {
        throw DimensionError("eval_from_observation: point dimension mismatch");
    }
    if (obs.state.size() != lib.d()) {
        throw DimensionError("eval_from_observation: state dimension mismatch");
    }
    Eigen::VectorXd atom_values(static_cast<Index>(lib.atoms().size()));
    for (std::size_t a = 0; a < lib.atoms().size(); ++a) {
        const Atom& atom = lib.atoms()[a];
        double v = 0.0;
        if (atom.kind == Atom::Kind::Coordinate) {
            v = obs.point[atom.index];
        } else if (atom.derivative_order() == 0) {
            v = obs.state[atom.index];
        } else {
            const auto it = obs.spatial_derivatives.find(atom.alpha);
            if (it == obs.spatial_derivatives.end()) {
                throw DomainError("eval_from_observation: observation lacks " + atom.name(lib.p(), lib.d()));
            }
            v = it->second[atom.index];
        }
        atom_values[static_cast<Index>(a)] = v;
    }
    return products(lib, atom_values);
}

Eigen::MatrixXd model_matrix(const BasisLibrary& lib, std::span<const Observation> obs)
{
    Eigen::MatrixXd m(static_cast<Index>(obs.size()), lib.size());
    for (std::size_t i = 0; i < obs.size(); ++i) {
        m.row(static_cast<Index>(i)) = eval_from_observation(lib, obs[i]).transpose();
    }
    return m;
}

Eigen::VectorXd eval_from_surrogate(const BasisLibrary& lib, std::span<const gp::GpModel> models,
                                    const DesignPoint& query)
{
    check_surrogate_capability(lib, models, query.dim());
    Eigen::VectorXd row(lib.size());
    surrogate_row(lib, models, query.coords(), row);
    return row;
}

Eigen::MatrixXd eval_surrogate_rows(const BasisLibrary& lib, std::span<const gp::GpModel> models,
                                    const Eigen::MatrixXd& points, Exec exec)
{
    check_surrogate_capability(lib, models, points.cols());
    const Index n = points.rows();
    // Row-major scratch so each candidate writes a contiguous slice.
    Eigen::MatrixXd rows_t(lib.size(), n);
    if (exec == Exec::Serial) {
        for (Index i = 0; i < n; ++i) {
            surrogate_row(lib, models, points.row(i).transpose(), rows_t.col(i));
        }
    } else {
#pragma omp parallel for schedule(static)
        for (Index i = 0; i < n; ++i) {
            surrogate_row(lib, models, points.row(i).transpose(), rows_t.col(i));
        }
    }
    return rows_t.transpose();
}

} // namespace acds::basis
