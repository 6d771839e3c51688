#include "asht/core.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "asht/errors.hpp"
#include "asht/optim.hpp"

namespace asht {

namespace {

std::string fmt_index(int i, int a, int x) {
    std::ostringstream os;
    os << "hypothesis " << i << ", arm " << a << ", symbol " << x;
    return os.str();
}

}  // namespace

FiniteDistribution::FiniteDistribution(std::vector<double> probs) : probs_(std::move(probs)) {
    if (probs_.empty()) throw ValidationError("distribution has empty support");
    double s = 0.0;
    for (std::size_t x = 0; x < probs_.size(); ++x) {
        if (!(probs_[x] > 0.0) || !std::isfinite(probs_[x])) {
            std::ostringstream os;
            os << "symbol " << x << ": probability must be positive and finite (got " << probs_[x] << ")";
            throw ValidationError(os.str());
        }
        s += probs_[x];
    }
    if (std::abs(s - 1.0) > kSimplexTol) {
        std::ostringstream os;
        os.precision(17);
        os << "probabilities sum to " << s << ", not 1";
        throw ValidationError(os.str());
    }
    // Leave rounding-level deviations alone so that save/load round-trips exactly.
    if (std::abs(s - 1.0) > 1e-15)
        for (auto& p : probs_) p /= s;
}

BanditClass::BanditClass(std::vector<std::vector<FiniteDistribution>> hyps, bool allow_duplicates)
    : hyps_(std::move(hyps)) {
    m_ = static_cast<int>(hyps_.size());
    if (m_ < 2) throw ValidationError("need at least two hypotheses");
    K_ = static_cast<int>(hyps_[0].size());
    if (K_ < 1) throw ValidationError("need at least one arm");
    X_ = static_cast<int>(hyps_[0][0].size());
    eps_ = 1.0;
    for (int i = 0; i < m_; ++i) {
        if (static_cast<int>(hyps_[i].size()) != K_)
            throw ValidationError("hypothesis " + std::to_string(i) + " has the wrong number of arms");
        for (int a = 0; a < K_; ++a) {
            if (static_cast<int>(hyps_[i][a].size()) != X_)
                throw ValidationError(fmt_index(i, a, 0) + ": support size mismatch");
            for (int x = 0; x < X_; ++x) eps_ = std::min(eps_, hyps_[i][a][x]);
        }
    }
    for (int i = 0; i < m_; ++i)
        for (int j = i + 1; j < m_; ++j)
            if (hyps_[i] == hyps_[j]) {
                if (!allow_duplicates)
                    throw ValidationError("hypotheses " + std::to_string(i) + " and " +
                                          std::to_string(j) + " are identical");
                has_duplicates_ = true;
            }
    a_bound_ = std::log(1.0 / eps_);
    log_.resize(static_cast<std::size_t>(K_) * X_ * m_);
    for (int a = 0; a < K_; ++a)
        for (int x = 0; x < X_; ++x)
            for (int i = 0; i < m_; ++i) log_[(a * X_ + x) * m_ + i] = std::log(hyps_[i][a][x]);
}

BanditClass BanditClass::from_bernoulli(const std::vector<std::vector<double>>& means,
                                        bool allow_duplicates) {
    std::vector<std::vector<FiniteDistribution>> h;
    for (std::size_t i = 0; i < means.size(); ++i) {
        std::vector<FiniteDistribution> arms;
        for (std::size_t a = 0; a < means[i].size(); ++a) {
            double p = means[i][a];
            if (!(p > 0.0 && p < 1.0))
                throw ValidationError(fmt_index(int(i), int(a), p <= 0.0 ? 0 : 1) +
                                      ": Bernoulli mean must lie strictly inside (0,1)");
            arms.push_back(FiniteDistribution::bernoulli(p));
        }
        h.push_back(std::move(arms));
    }
    return BanditClass(std::move(h), allow_duplicates);
}

double kl_divergence(std::span<const double> p, std::span<const double> q) {
    if (p.size() != q.size()) throw ValidationError("kl_divergence: support sizes differ");
    double d = 0.0;
    for (std::size_t x = 0; x < p.size(); ++x)
        if (p[x] > 0.0) d += p[x] * std::log(p[x] / q[x]);
    return d > 0.0 ? d : 0.0;
}

double kl_divergence(const FiniteDistribution& p, const FiniteDistribution& q) {
    return kl_divergence(std::span<const double>(p.probs()), std::span<const double>(q.probs()));
}

std::vector<double> checked_simplex(std::span<const double> v, const char* what) {
    double s = 0.0;
    for (double b : v) {
        if (!(b >= -kSimplexTol) || !std::isfinite(b))
            throw DomainError(std::string(what) + ": entry outside the simplex");
        s += b;
    }
    if (std::abs(s - 1.0) > kSimplexTol) throw DomainError(std::string(what) + ": entries do not sum to 1");
    std::vector<double> out(v.begin(), v.end());
    for (auto& b : out) b = std::max(b, 0.0) / s;
    return out;
}

double log_partition_unchecked(const BanditClass& inst, int arm, std::span<const double> beta) {
    const int m = inst.m(), X = inst.support_size();
    double e[64];
    std::vector<double> big;
    double* ex = e;
    if (X > 64) {
        big.resize(X);
        ex = big.data();
    }
    double emax = -INFINITY;
    for (int x = 0; x < X; ++x) {
        const double* L = inst.log_column(arm, x);
        double s = 0.0;
        for (int i = 0; i < m; ++i)
            if (beta[i] != 0.0) s += beta[i] * L[i];
        ex[x] = s;
        emax = std::max(emax, s);
    }
    double acc = 0.0;
    for (int x = 0; x < X; ++x) acc += std::exp(ex[x] - emax);
    return -(emax + std::log(acc));
}

double zeta(const BanditClass& inst, int arm, std::span<const double> beta) {
    if (static_cast<int>(beta.size()) != inst.m()) throw ValidationError("zeta: beta has wrong length");
    if (arm < 0 || arm >= inst.K()) throw ValidationError("zeta: arm out of range");
    auto b = checked_simplex(beta, "zeta");
    return log_partition_unchecked(inst, arm, b);
}

std::vector<int> largest_remainder(std::span<const double> w, int n) {
    if (n < 0) throw ValidationError("largest_remainder: negative count");
    const int K = static_cast<int>(w.size());
    double total = 0.0;
    for (double v : w) {
        if (!(v >= 0.0)) throw ValidationError("largest_remainder: weights must be nonnegative");
        total += v;
    }
    if (std::abs(total - 1.0) > kSimplexTol) throw ValidationError("largest_remainder: weights must sum to 1");
    std::vector<int> counts(K);
    std::vector<std::pair<double, int>> rem(K);
    int used = 0;
    for (int a = 0; a < K; ++a) {
        double exact = w[a] / total * n;
        counts[a] = static_cast<int>(std::floor(exact));
        used += counts[a];
        rem[a] = {-(exact - counts[a]), a};
    }
    std::sort(rem.begin(), rem.end());
    for (int k = 0; used < n; ++k, ++used) ++counts[rem[k % K].second];
    return counts;
}

std::vector<std::pair<int, int>> all_pairs(int m) {
    std::vector<std::pair<int, int>> S;
    for (int i = 0; i < m; ++i)
        for (int j = i + 1; j < m; ++j) S.emplace_back(i, j);
    return S;
}

// zeta_a at an arbitrary weight vector P together with its gradient in P.
double zeta_and_grad(const BanditClass& inst, int a, std::span<const double> P, std::vector<double>& grad) {
    const int m = inst.m(), X = inst.support_size();
    std::vector<double> e(X);
    double emax = -INFINITY;
    for (int x = 0; x < X; ++x) {
        const double* L = inst.log_column(a, x);
        double s = 0.0;
        for (int k = 0; k < m; ++k) s += P[k] * L[k];
        e[x] = s;
        emax = std::max(emax, s);
    }
    double acc = 0.0;
    for (int x = 0; x < X; ++x) {
        e[x] = std::exp(e[x] - emax);
        acc += e[x];
    }
    grad.assign(m, 0.0);
    for (int x = 0; x < X; ++x) {
        const double* L = inst.log_column(a, x);
        double pi = e[x] / acc;
        for (int k = 0; k < m; ++k) grad[k] -= pi * L[k];
    }
    return -(emax + std::log(acc));
}

double chernoff_information(const FiniteDistribution& p, const FiniteDistribution& q, double* s_star) {
    if (p.size() != q.size()) throw ValidationError("chernoff_information: support sizes differ");
    std::vector<double> lp(p.size()), lq(q.size());
    for (std::size_t x = 0; x < p.size(); ++x) {
        lp[x] = std::log(p[x]);
        lq[x] = std::log(q[x]);
    }
    auto f = [&](double s) {
        double emax = -INFINITY;
        std::vector<double> e(p.size());
        for (std::size_t x = 0; x < p.size(); ++x) {
            e[x] = s * lq[x] + (1.0 - s) * lp[x];
            emax = std::max(emax, e[x]);
        }
        double acc = 0.0;
        for (double v : e) acc += std::exp(v - emax);
        return -(emax + std::log(acc));
    };
    double s = 0.5;
    double v = golden_max(f, 0.0, 1.0, 1e-10, &s);
    if (s_star) *s_star = s;
    return v > 0.0 ? v : 0.0;
}

double chernoff_information(const FiniteDistribution& p, const FiniteDistribution& q) {
    return chernoff_information(p, q, nullptr);
}

double round_sig(double v, int digits) {
    if (!std::isfinite(v) || v == 0.0) return v;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return std::strtod(buf, nullptr);
}

BanditClass parse_instance(const nlohmann::json& j) {
    try {
        int m = j.at("m").get<int>();
        int K = j.at("K").get<int>();
        int X = j.at("support").get<int>();
        std::vector<std::vector<FiniteDistribution>> h;
        if (j.contains("hypotheses")) {
            const auto& H = j.at("hypotheses");
            if (static_cast<int>(H.size()) != m) throw ValidationError("hypotheses array length differs from m");
            for (int i = 0; i < m; ++i) {
                if (static_cast<int>(H[i].size()) != K)
                    throw ValidationError("hypothesis " + std::to_string(i) + " does not have K arms");
                std::vector<FiniteDistribution> arms;
                for (int a = 0; a < K; ++a) {
                    auto row = H[i][a].get<std::vector<double>>();
                    if (static_cast<int>(row.size()) != X)
                        throw ValidationError(fmt_index(i, a, 0) + ": row length differs from support");
                    try {
                        arms.emplace_back(std::move(row));
                    } catch (const ValidationError& e) {
                        throw ValidationError("hypothesis " + std::to_string(i) + ", arm " + std::to_string(a) +
                                              ", " + e.what());
                    }
                }
                h.push_back(std::move(arms));
            }
            return BanditClass(std::move(h));
        }
        if (j.contains("bernoulli_means")) {
            if (X != 2) throw ValidationError("bernoulli_means requires support == 2");
            auto means = j.at("bernoulli_means").get<std::vector<std::vector<double>>>();
            if (static_cast<int>(means.size()) != m) throw ValidationError("bernoulli_means length differs from m");
            for (int i = 0; i < m; ++i)
                if (static_cast<int>(means[i].size()) != K)
                    throw ValidationError("hypothesis " + std::to_string(i) + " does not have K arms");
            return BanditClass::from_bernoulli(means);
        }
        throw ValidationError("instance has neither hypotheses nor bernoulli_means");
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed instance: ") + e.what());
    }
}

BanditClass load_instance(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open instance file " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("instance file " + path + " is not valid JSON: " + e.what());
    }
    return parse_instance(j);
}

nlohmann::json instance_to_json(const BanditClass& inst) {
    nlohmann::json h = nlohmann::json::array();
    for (int i = 0; i < inst.m(); ++i) {
        nlohmann::json arms = nlohmann::json::array();
        for (int a = 0; a < inst.K(); ++a) arms.push_back(inst.nu(i, a).probs());
        h.push_back(arms);
    }
    return {{"m", inst.m()}, {"K", inst.K()}, {"support", inst.support_size()}, {"hypotheses", h}};
}

void save_instance(const BanditClass& inst, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write instance file " + path);
    out << instance_to_json(inst).dump(2) << '\n';
}

}  // namespace asht
