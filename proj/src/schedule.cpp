#include "promptopt/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include "promptopt/errors.hpp"

namespace promptopt {

ScheduleKind schedule_kind_from_string(const std::string& s) {
    if (s == "none") return ScheduleKind::none;
    if (s == "fixed") return ScheduleKind::fixed;
    if (s == "linear_decay") return ScheduleKind::linear_decay;
    if (s == "cosine_decay") return ScheduleKind::cosine_decay;
    throw ConfigError("unknown schedule kind: " + s);
}

std::string to_string(ScheduleKind k) {
    switch (k) {
        case ScheduleKind::none: return "none";
        case ScheduleKind::fixed: return "fixed";
        case ScheduleKind::linear_decay: return "linear_decay";
        case ScheduleKind::cosine_decay: return "cosine_decay";
    }
    return "none";
}

std::optional<int> constraint_at(const EditBudgetSchedule& schedule, int t) {
    if (schedule.kind == ScheduleKind::none) {
        return std::nullopt;
    }
    const int T = schedule.horizon;
    if (t < 0 || t >= T) {
        std::ostringstream msg;
        msg << "step " << t << " outside horizon [0, " << T << ")";
        throw StepOutOfRange(msg.str());
    }

    const double c_max = static_cast<double>(schedule.c_max);
    const double c_end = schedule.floor_fraction * c_max;
    const double progress = (T > 1) ? static_cast<double>(t) / (T - 1) : 0.0;

    double value = c_max;
    switch (schedule.kind) {
        case ScheduleKind::fixed:
            value = c_max;
            break;
        case ScheduleKind::linear_decay:
            value = c_max - (c_max - c_end) * progress;
            break;
        case ScheduleKind::cosine_decay:
            value = c_end + (c_max - c_end) * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
            break;
        case ScheduleKind::none:
            break;
    }

    if (schedule.warmup) {
        const int W = std::max(1, static_cast<int>(std::ceil(schedule.warmup_fraction * T)));
        if (t < W) {
            value *= static_cast<double>(t + 1) / W;
        }
    }

    const long long rounded = std::llround(value);
    return static_cast<int>(std::max(1LL, rounded));
}

namespace {

std::vector<std::string> tokenize(const std::string& s) {
    std::vector<std::string> tokens;
    std::istringstream stream(s);
    std::string token;
    while (stream >> token) {
        tokens.push_back(token);
    }
    return tokens;
}

}  // namespace

int word_edit_distance(const std::string& a, const std::string& b) {
    const auto ta = tokenize(a);
    const auto tb = tokenize(b);
    const std::size_t n = ta.size();
    const std::size_t m = tb.size();

    std::vector<int> prev(m + 1);
    std::vector<int> curr(m + 1);
    for (std::size_t j = 0; j <= m; ++j) {
        prev[j] = static_cast<int>(j);
    }
    for (std::size_t i = 1; i <= n; ++i) {
        curr[0] = static_cast<int>(i);
        for (std::size_t j = 1; j <= m; ++j) {
            const int substitute = prev[j - 1] + (ta[i - 1] == tb[j - 1] ? 0 : 1);
            curr[j] = std::min({prev[j] + 1, curr[j - 1] + 1, substitute});
        }
        std::swap(prev, curr);
    }
    return prev[m];
}

}  // namespace promptopt
