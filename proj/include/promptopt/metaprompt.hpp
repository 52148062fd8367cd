#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "promptopt/evaluation.hpp"
#include "promptopt/trajectory.hpp"

namespace promptopt {

enum class TemplateId {
    gpo_update,
    ape_update,
    apo_gradient,
    apo_update,
    opro_update,
    pe2_gradient,
    pe2_update,
    sgdm_gradient,
    sgdm_momentum,
    sgdm_update,
    pp_block,
    ppr_block,
    retrieval_block,
    summarization_block,
    editing_update,
    generation_update,
};

inline constexpr int kTemplateCount = 16;

TemplateId template_id_from_string(const std::string& s);
std::string to_string(TemplateId id);
std::vector<TemplateId> all_template_ids();

struct RenderedMetaPrompt {
    std::string text;
    std::map<std::string, std::string> bound_placeholders;
    TemplateId template_id;
};

/// Immutable registry of the meta-prompt template bodies, loaded from
/// plain-text resource files (one per template id).
class TemplateRegistry {
public:
    /// Loads <dir>/<template_id>.txt for every id.
    static TemplateRegistry load(const std::string& dir);

    const std::string& body(TemplateId id) const;

    /// Placeholder names ("{name}" occurrences) in a template body.
    static std::vector<std::string> placeholders_in(const std::string& body);

    /// Substitutes every placeholder; throws MissingPlaceholder naming the
    /// unbound ones. Bindings for names absent from the body are ignored.
    RenderedMetaPrompt render(TemplateId id,
                              const std::map<std::string, std::string>& bindings) const;

    /// Update meta-prompt for one optimization step. trajectory_block and
    /// examples_block come from the format_* helpers; problems is required
    /// for the reflection-bearing templates; budget drives the
    /// "change up to N words" sentence, which is dropped entirely when absent.
    RenderedMetaPrompt render_update(TemplateId id, const std::string& current_prompt,
                                     const Score& current_score,
                                     const std::string& trajectory_block,
                                     const std::string& examples_block,
                                     const std::optional<std::string>& problems,
                                     const std::optional<int>& budget,
                                     const std::string& position_desc) const;

    /// Reflection ("textual gradient") meta-prompt. Throws EmptyErrorDemos.
    RenderedMetaPrompt render_gradient(TemplateId id, const std::string& current_prompt,
                                       const std::vector<ErrorDemo>& error_demos) const;

private:
    std::map<TemplateId, std::string> bodies_;
};

/// "Prompt: ...\nScore: N" blocks separated by blank lines, preserving
/// input order. Scores display as the nearest integer.
std::string format_trajectory_block(const std::vector<TrajectoryEntry>& entries);

/// Exemplar blocks for the meta-prompt; the literal token "<Prompt>" stands
/// where the task prompt will be inserted. Throws ExampleCountMismatch when
/// the list size differs from expected_count.
std::string format_task_examples(const std::vector<TaskExample>& examples,
                                 PromptPosition position, int expected_count = 3);

std::string format_error_demos(const std::vector<ErrorDemo>& demos);

std::string position_description(PromptPosition position);

/// Compile-time default pointing at the repo's templates/ directory;
/// overridable via run configuration.
std::string default_template_dir();

}  // namespace promptopt
