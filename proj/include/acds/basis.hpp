#ifndef ACDS_BASIS_HPP
#define ACDS_BASIS_HPP

#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "acds/core.hpp"
#include "acds/gp.hpp"
#include "acds/parallel.hpp"

namespace acds::basis {

/// A single factor of a basis term: a coordinate x_s or a (derivative of a) state u_r.
struct Atom {
    enum class Kind { Coordinate, Field };

    Kind kind = Kind::Field;
    /// Coordinate index s for Kind::Coordinate, state index r for Kind::Field.
    int index = 0;
    /// Derivative multi-index for fields; all zeros for the state itself.
    MultiIndex alpha;

    static Atom coordinate(int s, int p);
    static Atom state(int r, int p);
    static Atom derivative(int r, MultiIndex alpha);

    int derivative_order() const { return kind == Kind::Field ? total_order(alpha) : 0; }
    std::string name(int p, int d) const;

    friend bool operator==(const Atom&, const Atom&) = default;
};

/// Product of atoms; an empty product is the constant 1.
struct BasisTerm {
    /// Indices into BasisLibrary::atoms(), sorted ascending.
    std::vector<int> factors;
    std::string display_name;

    bool is_constant() const { return factors.empty(); }
};

class BasisLibrary {
public:
    BasisLibrary(int p, int d, std::vector<Atom> atoms, std::vector<std::vector<int>> factor_lists);

    int p() const { return p_; }
    int d() const { return d_; }
    Index size() const { return static_cast<Index>(terms_.size()); }
    const std::vector<Atom>& atoms() const { return atoms_; }
    const std::vector<BasisTerm>& terms() const { return terms_; }
    const BasisTerm& term(Index i) const { return terms_[static_cast<std::size_t>(i)]; }
    int max_derivative_order() const;
    /// Index of the term with the given display name, or -1.
    Index index_of(const std::string& name) const;
    std::vector<std::string> names() const;

private:
    int p_;
    int d_;
    std::vector<Atom> atoms_;
    std::vector<BasisTerm> terms_;
};

/// Tensor-product library of degree k1 over {1, x, u, derivatives up to order k2}.
BasisLibrary build_library(int p, int d, int k1, int k2, bool include_coords);

/// All monomials in d states of total degree <= max_degree, constant first.
BasisLibrary build_monomial_library(int d, int max_degree, int p = 1);

/// The fixed 20-term candidate set used for the Burgers study.
BasisLibrary burgers_library();

/// Model-matrix row from observed state and derivative values.
Eigen::VectorXd eval_from_observation(const BasisLibrary& lib, const Observation& obs);
Eigen::MatrixXd model_matrix(const BasisLibrary& lib, std::span<const Observation> obs);

/// Model-matrix row with states and derivatives replaced by GP predictions.
Eigen::VectorXd eval_from_surrogate(const BasisLibrary& lib, std::span<const gp::GpModel> models,
                                    const DesignPoint& query);

/// Surrogate rows for every row of `points` (n x p). Serial and OpenMP paths
/// produce identical output.
Eigen::MatrixXd eval_surrogate_rows(const BasisLibrary& lib, std::span<const gp::GpModel> models,
                                    const Eigen::MatrixXd& points, Exec exec = Exec::Parallel);

} // namespace acds::basis

#endif // ACDS_BASIS_HPP
