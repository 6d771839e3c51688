#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace asht {

constexpr double kSimplexTol = 1e-9;

// Probability vector over a finite support with strictly positive entries.
class FiniteDistribution {
public:
    FiniteDistribution() = default;
    // Renormalizes when the sum is within kSimplexTol of 1, rejects otherwise.
    explicit FiniteDistribution(std::vector<double> probs);

    std::size_t size() const { return probs_.size(); }
    double operator[](std::size_t x) const { return probs_[x]; }
    const std::vector<double>& probs() const { return probs_; }
    bool operator==(const FiniteDistribution& o) const { return probs_ == o.probs_; }

    static FiniteDistribution bernoulli(double p) { return FiniteDistribution({p, 1.0 - p}); }

private:
    std::vector<double> probs_;
};

using Allocation = std::vector<double>;

// The instance: m hypotheses, each a K-tuple of arm distributions on a common support.
class BanditClass {
public:
    BanditClass() = default;
    // hyps[i][a] is the distribution of arm a under hypothesis i.
    explicit BanditClass(std::vector<std::vector<FiniteDistribution>> hyps,
                         bool allow_duplicates = false);

    static BanditClass from_bernoulli(const std::vector<std::vector<double>>& means,
                                      bool allow_duplicates = false);

    int m() const { return m_; }
    int K() const { return K_; }
    int support_size() const { return X_; }
    double eps() const { return eps_; }
    double a_bound() const { return a_bound_; }
    const FiniteDistribution& nu(int i, int a) const { return hyps_[i][a]; }
    const std::vector<std::vector<FiniteDistribution>>& hypotheses() const { return hyps_; }
    bool has_duplicates() const { return has_duplicates_; }

    // log nu^i_a(x), laid out so the m values for fixed (a, x) are contiguous.
    double log_nu(int i, int a, int x) const { return log_[(a * X_ + x) * m_ + i]; }
    const double* log_column(int a, int x) const { return &log_[(a * X_ + x) * m_]; }

private:
    int m_ = 0, K_ = 0, X_ = 0;
    double eps_ = 0.0, a_bound_ = 0.0;
    bool has_duplicates_ = false;
    std::vector<std::vector<FiniteDistribution>> hyps_;
    std::vector<double> log_;
};

// D(p||q) in nats. p may contain zeros, q must not where p is positive.
double kl_divergence(std::span<const double> p, std::span<const double> q);
double kl_divergence(const FiniteDistribution& p, const FiniteDistribution& q);

// -log sum_x prod_i nu^i_a(x)^{beta_i} for beta on the m-simplex.
double zeta(const BanditClass& inst, int arm, std::span<const double> beta);
// Same without simplex validation; beta may be any real vector.
double log_partition_unchecked(const BanditClass& inst, int arm, std::span<const double> beta);
// zeta for an unchecked beta together with its gradient in beta.
double zeta_and_grad(const BanditClass& inst, int arm, std::span<const double> beta, std::vector<double>& grad);
// Pairs (i, j) with i < j in lexicographic order.
std::vector<std::pair<int, int>> all_pairs(int m);
// Integer counts summing to n from weights w: floors plus largest remainders, ties to the smaller index.
std::vector<int> largest_remainder(std::span<const double> w, int n);

double chernoff_information(const FiniteDistribution& p, const FiniteDistribution& q);
// Returns the maximizing exponent s as well.
double chernoff_information(const FiniteDistribution& p, const FiniteDistribution& q, double* s_star);

// Validates v against the simplex and returns its renormalized copy.
std::vector<double> checked_simplex(std::span<const double> v, const char* what);

// Rounds to the given number of significant digits; used for all serialized numbers.
double round_sig(double v, int digits = 9);

BanditClass parse_instance(const nlohmann::json& j);
BanditClass load_instance(const std::string& path);
nlohmann::json instance_to_json(const BanditClass& inst);
void save_instance(const BanditClass& inst, const std::string& path);

}  // namespace asht
