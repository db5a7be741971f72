#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace harmrank::prompts {

enum class Role { System, User, Assistant };
std::string_view role_name(Role role);

struct Message {
  Role role;
  std::string content;
  bool operator==(const Message&) const = default;
};

// Non-empty, last message from the user.
using MessageList = std::vector<Message>;
void check_message_list(const MessageList& messages);  // throws ParameterError

// The six-category harm definition used by the prompt-engineered strategy.
extern const std::string_view kDefaultHarmDefinition;
// Assistant turn that closes the exemplar block of the few-shot dialogue.
extern const std::string_view kExemplarAcknowledgment;
// Line separating consecutive exemplars.
extern const std::string_view kExemplarSeparator;

struct ZeroShot {};
struct ZeroShotPE {
  std::string harm_definition{kDefaultHarmDefinition};
};
struct FewShotIcl {
  std::vector<std::string> exemplars;  // size is N
};
using PromptStrategy = std::variant<ZeroShot, ZeroShotPE, FewShotIcl>;

std::string strategy_name(const PromptStrategy& strategy);

MessageList build_zero_shot(std::string_view a_text, std::string_view b_text);
MessageList build_zero_shot_pe(std::string_view a_text, std::string_view b_text,
                               std::string_view harm_definition = kDefaultHarmDefinition);
MessageList build_few_shot_icl(std::string_view a_text, std::string_view b_text,
                               const std::vector<std::string>& exemplars);

MessageList build_messages(const PromptStrategy& strategy, std::string_view a_text,
                           std::string_view b_text);

}  // namespace harmrank::prompts
