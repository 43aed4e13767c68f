#include "factorcast/johansen.hpp"
#include "factorcast/errors.hpp"
#include "factorcast/ols.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>

namespace factorcast {

namespace detail {
extern const char* kJohansenTraceTableText;
}

namespace {

int det_key(JohansenDet det) { return static_cast<int>(det); }

JohansenDet det_from_name(const std::string& name) {
    if (name == "none") return JohansenDet::None;
    if (name == "restricted-constant") return JohansenDet::RestrictedConstant;
    if (name == "unrestricted-constant") return JohansenDet::UnrestrictedConstant;
    throw FormatError("unknown deterministic case '" + name + "' in critical-value table");
}

std::uint64_t fnv1a64(const std::string& data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Moment-matrix rank guard: smallest/largest eigenvalue ratio.
void require_nonsingular(const Eigen::MatrixXd& m, const char* name) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
    const auto& ev = es.eigenvalues();
    const double largest = ev(ev.size() - 1);
    if (!(largest > 0.0) || ev(0) <= largest * 1e-10)
        throw SingularMatrixError(std::string("johansen_pairwise: singular moment matrix ") +
                                  name + " (collinear inputs?)");
}

} // namespace

const char* johansen_det_name(JohansenDet det) {
    switch (det) {
        case JohansenDet::None: return "none";
        case JohansenDet::RestrictedConstant: return "restricted-constant";
        case JohansenDet::UnrestrictedConstant: return "unrestricted-constant";
    }
    return "?";
}

TraceCriticalTable TraceCriticalTable::parse(const std::string& text) {
    std::istringstream in(text);
    std::string first;
    if (!std::getline(in, first))
        throw FormatError("critical-value table: empty input");
    const std::string tag = "johansen-trace-cv v1 fnv1a64=";
    if (first.rfind(tag, 0) != 0)
        throw FormatError("critical-value table: unrecognized header");
    const std::uint64_t expected = std::stoull(first.substr(tag.size()), nullptr, 16);

    std::string payload;
    {
        std::ostringstream rest;
        rest << in.rdbuf();
        payload = rest.str();
    }
    if (fnv1a64(payload) != expected)
        throw FormatError("critical-value table: checksum mismatch");

    TraceCriticalTable table;
    std::istringstream lines(payload);
    std::string line;
    while (std::getline(lines, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string kind;
        int dim;
        double level, cv;
        if (!(ls >> kind >> dim >> level >> cv))
            throw FormatError("critical-value table: bad row '" + line + "'");
        table.rows_[{det_key(det_from_name(kind)), dim}].push_back({level, cv});
    }
    // Order each row by descending significance level (ascending cv).
    for (auto& [key, knots] : table.rows_) {
        std::sort(knots.begin(), knots.end(),
                  [](const Knot& a, const Knot& b) { return a.level > b.level; });
        for (std::size_t i = 1; i < knots.size(); ++i)
            if (knots[i].cv <= knots[i - 1].cv)
                throw FormatError("critical-value table: non-monotone row");
    }
    return table;
}

double TraceCriticalTable::critical_value(JohansenDet det, int dim, double level) const {
    const auto it = rows_.find({det_key(det), dim});
    if (it == rows_.end())
        throw DomainError("no critical values for dimension " + std::to_string(dim));
    for (const Knot& k : it->second)
        if (std::abs(k.level - level) < 1e-12) return k.cv;
    throw DomainError("significance level not tabulated");
}

double TraceCriticalTable::p_value(JohansenDet det, int dim, double stat) const {
    const auto it = rows_.find({det_key(det), dim});
    if (it == rows_.end())
        throw DomainError("no critical values for dimension " + std::to_string(dim));
    const auto& knots = it->second;

    // ln(level) is piecewise linear in the critical value; extrapolate with
    // the boundary segment slopes and clamp outside the table.
    auto interp = [&](const Knot& a, const Knot& b) {
        const double slope = (std::log(b.level) - std::log(a.level)) / (b.cv - a.cv);
        return std::exp(std::log(a.level) + slope * (stat - a.cv));
    };
    double p;
    if (stat <= knots.front().cv) {
        p = interp(knots.front(), knots[1]);
    } else if (stat >= knots.back().cv) {
        p = interp(knots[knots.size() - 2], knots.back());
    } else {
        std::size_t i = 1;
        while (knots[i].cv < stat) ++i;
        p = interp(knots[i - 1], knots[i]);
    }
    return std::clamp(p, 0.001, 0.999);
}

const TraceCriticalTable& trace_table() {
    static const TraceCriticalTable table =
        TraceCriticalTable::parse(detail::kJohansenTraceTableText);
    return table;
}

TraceCriticalTable load_trace_table_file(const std::string& path) {
    std::ifstream in(path);
    if (!in.is_open()) throw IoError("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return TraceCriticalTable::parse(buf.str());
}

JohansenResult johansen_pairwise(std::span<const double> y,
                                 std::span<const double> x,
                                 int lag_order, JohansenDet det) {
    if (y.size() != x.size())
        throw ShapeError("johansen_pairwise: series lengths differ");
    if (lag_order < 0) throw DomainError("johansen_pairwise: negative lag order");
    const int n = static_cast<int>(y.size());
    if (n < 20 + lag_order)
        throw InsufficientDataError("johansen_pairwise: need at least " +
                                    std::to_string(20 + lag_order) + " observations");
    for (int i = 0; i < n; ++i)
        if (!std::isfinite(y[i]) || !std::isfinite(x[i]))
            throw DomainError("johansen_pairwise: non-finite input");

    constexpr int p = 2;
    const int k = lag_order;
    const int T = n - 1 - k;

    Eigen::MatrixXd dx(n - 1, p);
    for (int t = 0; t + 1 < n; ++t) {
        dx(t, 0) = y[t + 1] - y[t];
        dx(t, 1) = x[t + 1] - x[t];
    }

    // Dependent block: differences at times k .. n-2.
    Eigen::MatrixXd d0 = dx.bottomRows(T);

    // Short-run regressors: k lagged difference blocks (+ constant if
    // the deterministic term is unrestricted).
    const int zcols = p * k + (det == JohansenDet::UnrestrictedConstant ? 1 : 0);
    Eigen::MatrixXd Z(T, zcols);
    for (int j = 0; j < k; ++j)
        Z.middleCols(p * j, p) = dx.middleRows(k - 1 - j, T);
    if (det == JohansenDet::UnrestrictedConstant) Z.col(p * k).setOnes();

    // Lagged levels y_{t-1}, augmented with a constant when it is
    // restricted to the cointegrating relation.
    const int m = p + (det == JohansenDet::RestrictedConstant ? 1 : 0);
    Eigen::MatrixXd L1(T, m);
    for (int t = 0; t < T; ++t) {
        L1(t, 0) = y[k + t];
        L1(t, 1) = x[k + t];
    }
    if (det == JohansenDet::RestrictedConstant) L1.col(p).setOnes();

    const Eigen::MatrixXd R0 = ols_residuals(Z, d0);
    const Eigen::MatrixXd R1 = ols_residuals(Z, L1);

    const Eigen::MatrixXd S00 = R0.transpose() * R0 / T;
    const Eigen::MatrixXd S11 = R1.transpose() * R1 / T;
    const Eigen::MatrixXd S01 = R0.transpose() * R1 / T;
    require_nonsingular(S00, "S00");
    require_nonsingular(S11, "S11");

    // Eigenvalues of S11^-1 S10 S00^-1 S01 via a symmetric PSD form:
    // with S11 = L L' and S00 = M M', the matrix D D' (D = L^-1 S10 M^-T)
    // has the same spectrum.
    const Eigen::LLT<Eigen::MatrixXd> llt11(S11);
    const Eigen::LLT<Eigen::MatrixXd> llt00(S00);
    if (llt11.info() != Eigen::Success || llt00.info() != Eigen::Success)
        throw SingularMatrixError("johansen_pairwise: moment matrix not positive definite");
    const Eigen::MatrixXd C = llt00.matrixL().solve(S01).transpose(); // m x p
    const Eigen::MatrixXd D = llt11.matrixL().solve(C);               // m x p
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(D * D.transpose());

    JohansenResult out;
    out.lag_order = lag_order;
    out.n_obs = T;
    out.deterministic = det;
    for (int i = 0; i < p; ++i) {
        double lambda = es.eigenvalues()(m - 1 - i); // descending
        lambda = std::clamp(lambda, 0.0, 1.0 - 1e-15);
        out.eigenvalues.push_back(lambda);
    }
    const TraceCriticalTable& table = trace_table();
    for (int r = 0; r < p; ++r) {
        double stat = 0.0;
        for (int i = r; i < p; ++i) stat -= std::log1p(-out.eigenvalues[i]);
        stat *= T;
        out.trace_stats.push_back(stat);
        out.critical_values_95.push_back(table.critical_value(det, p - r, 0.05));
        out.p_values.push_back(table.p_value(det, p - r, stat));
    }
    return out;
}

} // namespace factorcast
