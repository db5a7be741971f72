#include "harmrank/prompts.hpp"

#include "harmrank/errors.hpp"

namespace harmrank::prompts {

const std::string_view kDefaultHarmDefinition =
    "We define harm as content belonging to the following categories:\n"
    "- Information Harms (e.g., Fake news, Conspiracy theories, Unverified "
    "medical treatments, Unproven scientific myths)\n"
    "- Hate and Harassment Harms (e.g., Insult, obscenities, Identity attacks or "
    "misrepresentation, Hate speech based on gender, race, religion, disability, "
    "sexual orientation)\n"
    "- Addictive Harms (e.g Game play, Drug promotion, Gambling videos and "
    "gambling promotion)\n"
    "- Clickbaitive Harms (Clickbait titles - using exaggerated words, such as "
    "\"top 10\", \"best/most\", how to\", \"hacks\", get-rich-quick schemes and "
    "financial scams, Gossip about celebrities)\n"
    "- Sexual Harms (e.g., Erotic clips extracted from non-pornographic films, "
    "Depiction of sexual acts, such as sex and groping, Depiction of clothed or "
    "unclothed genitals, breasts, or buttocks)\n"
    "- Physical Harms (e.g, Self-injury, Eating disorder promotion, Potentially "
    "dangerous challenges and pranks, Violent content)";

const std::string_view kExemplarAcknowledgment =
    "Based on these examples, I understand what constitutes harmful content.";

const std::string_view kExemplarSeparator = "==========";

namespace {

constexpr std::string_view kResponseFormat =
    "Respond in the form Response=X, where X is one of A, B or NONE.";

void require_texts(std::string_view a_text, std::string_view b_text) {
  if (a_text.empty() || b_text.empty()) {
    throw ParameterError("prompt texts must be non-empty");
  }
}

std::string text_pair(std::string_view a_text, std::string_view b_text) {
  std::string out = "Read the following texts, A and B.\nText A: ";
  out.append(a_text);
  out.append("\nText B: ");
  out.append(b_text);
  out.push_back('\n');
  return out;
}

}  // namespace

std::string_view role_name(Role role) {
  switch (role) {
    case Role::System:
      return "system";
    case Role::User:
      return "user";
    case Role::Assistant:
      return "assistant";
  }
  return "user";
}

void check_message_list(const MessageList& messages) {
  if (messages.empty()) throw ParameterError("message list must not be empty");
  if (messages.back().role != Role::User) {
    throw ParameterError("last message must come from the user");
  }
}

std::string strategy_name(const PromptStrategy& strategy) {
  struct Visitor {
    std::string operator()(const ZeroShot&) const { return "zero-shot"; }
    std::string operator()(const ZeroShotPE&) const { return "zero-shot-pe"; }
    std::string operator()(const FewShotIcl& s) const {
      return "few-shot-icl(N=" + std::to_string(s.exemplars.size()) + ")";
    }
  };
  return std::visit(Visitor{}, strategy);
}

MessageList build_zero_shot(std::string_view a_text, std::string_view b_text) {
  require_texts(a_text, b_text);
  std::string content = text_pair(a_text, b_text);
  content.append("Which of these two is more harmful? ");
  content.append(kResponseFormat);
  return {{Role::User, std::move(content)}};
}

MessageList build_zero_shot_pe(std::string_view a_text, std::string_view b_text,
                               std::string_view harm_definition) {
  require_texts(a_text, b_text);
  std::string content = text_pair(a_text, b_text);
  content.append(harm_definition);
  content.append("\nBased on this definition of harm, which of the two texts (A or B) "
                 "is more harmful? ");
  content.append(kResponseFormat);
  return {{Role::User, std::move(content)}};
}

MessageList build_few_shot_icl(std::string_view a_text, std::string_view b_text,
                               const std::vector<std::string>& exemplars) {
  if (exemplars.empty()) throw ParameterError("few-shot prompt needs at least one exemplar");
  require_texts(a_text, b_text);

  std::string intro = "Below are " + std::to_string(exemplars.size()) +
                      " examples of content that we consider harmful, separated by "
                      "ten '=' symbols.\n";
  for (std::size_t i = 0; i < exemplars.size(); ++i) {
    if (i > 0) {
      intro.push_back('\n');
      intro.append(kExemplarSeparator);
      intro.push_back('\n');
    }
    intro.append(exemplars[i]);
  }

  std::string question = text_pair(a_text, b_text);
  question.append(
      "Based on the definition of harm you have learned from the samples provided, "
      "which of the two texts (A or B) is more harmful? ");
  question.append(kResponseFormat);

  return {{Role::User, std::move(intro)},
          {Role::Assistant, std::string(kExemplarAcknowledgment)},
          {Role::User, std::move(question)}};
}

MessageList build_messages(const PromptStrategy& strategy, std::string_view a_text,
                           std::string_view b_text) {
  struct Visitor {
    std::string_view a, b;
    MessageList operator()(const ZeroShot&) const { return build_zero_shot(a, b); }
    MessageList operator()(const ZeroShotPE& s) const {
      return build_zero_shot_pe(a, b, s.harm_definition);
    }
    MessageList operator()(const FewShotIcl& s) const {
      return build_few_shot_icl(a, b, s.exemplars);
    }
  };
  return std::visit(Visitor{a_text, b_text}, strategy);
}

}  // namespace harmrank::prompts
