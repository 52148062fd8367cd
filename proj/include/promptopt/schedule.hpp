#pragma once

#include <optional>
#include <string>

namespace promptopt {

enum class ScheduleKind { none, fixed, linear_decay, cosine_decay };

ScheduleKind schedule_kind_from_string(const std::string& s);
std::string to_string(ScheduleKind k);

/// Word-change budget curve for the optimizer meta-prompt, shaped like a
/// learning-rate schedule: the budget starts at c_max and decays to
/// floor_fraction * c_max over the planned horizon, with optional linear
/// warmup over the first warmup_fraction of steps.
struct EditBudgetSchedule {
    ScheduleKind kind = ScheduleKind::none;
    int c_max = 1;                  // maximum word budget
    double floor_fraction = 0.2;    // terminal value as fraction of c_max
    bool warmup = false;
    double warmup_fraction = 0.05;
    int horizon = 1;                // total planned steps T
};

/// Budget at step t (0-based, t < horizon). Empty when kind == none.
/// Result is always >= 1.
std::optional<int> constraint_at(const EditBudgetSchedule& schedule, int t);

/// Levenshtein distance over whitespace-separated tokens
/// (insert/delete/substitute all cost 1).
int word_edit_distance(const std::string& a, const std::string& b);

}  // namespace promptopt
