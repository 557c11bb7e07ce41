#include "aichain/prompt.hpp"

#include <algorithm>

namespace aichain {

std::string_view aspect_name(Aspect a) noexcept {
  switch (a) {
    case Aspect::context: return "context";
    case Aspect::instruction: return "instruction";
    case Aspect::examples: return "examples";
    case Aspect::output_formatter: return "output_formatter";
  }
  return "instruction";
}

PlaceholderSyntaxError::PlaceholderSyntaxError(Aspect aspect, std::size_t offset,
                                               const std::string& detail)
    : InvalidArgument("malformed placeholder in " + std::string(aspect_name(aspect)) +
                      " at offset " + std::to_string(offset) + ": " + detail),
      aspect_(aspect),
      offset_(offset) {}

UnresolvedPlaceholder::UnresolvedPlaceholder(std::string identifier)
    : Error("unresolved placeholder '{{" + identifier + "}}'"), identifier_(std::move(identifier)) {}

namespace {

// One pass over the text. `on_literal` receives verbatim spans, `on_name`
// receives placeholder identifiers.
template <typename Literal, typename Name>
void scan(std::string_view text, Aspect aspect, Literal&& on_literal, Name&& on_name) {
  std::size_t i = 0;
  std::size_t run_start = 0;
  while (i < text.size()) {
    if (text.compare(i, 2, "{{") != 0) {
      ++i;
      continue;
    }
    on_literal(text.substr(run_start, i - run_start));
    if (text.compare(i, 4, "{{{{") == 0) {
      on_literal("{{");
      i += 4;
      run_start = i;
      continue;
    }
    const std::size_t close = text.find("}}", i + 2);
    if (close == std::string_view::npos) {
      throw PlaceholderSyntaxError(aspect, i, "unbalanced '{{'");
    }
    const std::string_view name = text.substr(i + 2, close - i - 2);
    if (!is_identifier(name)) {
      throw PlaceholderSyntaxError(aspect, i, "'" + std::string(name) + "' is not an identifier");
    }
    on_name(name);
    i = close + 2;
    run_start = i;
  }
  on_literal(text.substr(run_start));
}

struct AspectText {
  Aspect aspect;
  std::string_view text;
};

std::vector<AspectText> present_aspects(const PromptTemplate& t) {
  std::vector<AspectText> out;
  auto add = [&out](Aspect a, const std::optional<std::string>& s) {
    if (s && !s->empty()) out.push_back({a, *s});
  };
  add(Aspect::context, t.context);
  out.push_back({Aspect::instruction, t.instruction});
  add(Aspect::examples, t.examples);
  add(Aspect::output_formatter, t.output_formatter);
  return out;
}

void collect(std::string_view text, Aspect aspect, std::vector<std::string>& out) {
  scan(
      text, aspect, [](std::string_view) {},
      [&out](std::string_view name) {
        if (std::find(out.begin(), out.end(), name) == out.end()) out.emplace_back(name);
      });
}

void substitute(std::string_view text, Aspect aspect, const Environment& bindings,
                std::string& out) {
  scan(
      text, aspect, [&out](std::string_view lit) { out.append(lit); },
      [&](std::string_view name) {
        auto it = bindings.find(name);
        if (it == bindings.end()) throw UnresolvedPlaceholder(std::string(name));
        out += it->second.to_text();
      });
}

}  // namespace

void check_template(const PromptTemplate& t) {
  if (!is_identifier(t.name)) {
    throw InvalidArgument("prompt name '" + t.name + "' is not an identifier");
  }
  if (t.instruction.empty()) {
    throw InvalidArgument("prompt '" + t.name + "' has an empty instruction");
  }
  extract_placeholders(t);
}

std::vector<std::string> extract_placeholders(const PromptTemplate& t) {
  std::vector<std::string> out;
  for (const auto& a : present_aspects(t)) collect(a.text, a.aspect, out);
  return out;
}

std::vector<std::string> extract_placeholders(std::string_view body) {
  std::vector<std::string> out;
  collect(body, Aspect::instruction, out);
  return out;
}

std::string render(const PromptTemplate& t, const Environment& bindings) {
  std::string out;
  bool first = true;
  for (const auto& a : present_aspects(t)) {
    if (!first) out += "\n\n";
    first = false;
    substitute(a.text, a.aspect, bindings, out);
  }
  return out;
}

std::string render(std::string_view body, const Environment& bindings) {
  std::string out;
  substitute(body, Aspect::instruction, bindings, out);
  return out;
}

}  // namespace aichain
