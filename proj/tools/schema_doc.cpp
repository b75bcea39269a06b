// Prints the config schema as a markdown table (docs/config.md is generated from this).

#include "llab/config.hpp"

#include <charconv>
#include <cstdio>
#include <string>

namespace {

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) out += c == '|' ? std::string("\\|") : std::string(1, c);
  return out;
}

// shortest round-trip form of each comma-separated number
std::string shortest(const std::string& s) {
  std::string out;
  size_t p = 0;
  while (p <= s.size()) {
    size_t e = s.find(',', p);
    if (e == std::string::npos) e = s.size();
    std::string tok = s.substr(p, e - p);
    while (!tok.empty() && tok.front() == ' ') tok.erase(tok.begin());
    std::string pre, post;
    if (!tok.empty() && (tok.front() == '(' || tok.front() == '[')) pre = tok.substr(0, 1), tok.erase(0, 1);
    if (!tok.empty() && (tok.back() == ')' || tok.back() == ']')) post = tok.substr(tok.size() - 1), tok.pop_back();
    char* end = nullptr;
    double v = std::strtod(tok.c_str(), &end);
    if (!tok.empty() && end && *end == '\0') {
      char buf[32];
      auto r = std::to_chars(buf, buf + sizeof buf, v);
      tok.assign(buf, r.ptr);
    }
    out += (out.empty() ? "" : ", ") + pre + tok + post;
    p = e + 1;
  }
  return out;
}

}  // namespace

int main() {
  std::printf("# Run configuration\n\n");
  std::printf("INI file. Keys before the first section are top level; the rest live in the\n"
              "`[domain]`, `[grid]`, `[schedule]`, `[macro]`, `[flatten]`, `[duality]` and `[checks]`\n"
              "sections. Lists are comma separated. Unknown keys, repeated keys, malformed values\n"
              "and values outside their range are rejected with a message naming the key path.\n"
              "`llab validate-config --config FILE --print` shows the canonical form; its FNV-1a\n"
              "hash (computed with `output_dir` blanked) tags every artifact of a run.\n\n");
  std::printf("| key | type | default | range | meaning |\n|---|---|---|---|---|\n");
  for (const auto& r : llab::config_schema())
    std::printf("| `%s` | %s | `%s` | %s | %s |\n", r.path.c_str(), r.type.c_str(),
                shortest(r.default_value).c_str(), escape(shortest(r.range)).c_str(), r.doc.c_str());
  std::printf("\n## Profiles\n\n`ci` is the default configuration. `desk` raises the grids:\n\n```ini\n");
  llab::RunConfig ci = llab::profile_config("ci"), desk = llab::profile_config("desk");
  std::string a = llab::serialize_config(ci), b = llab::serialize_config(desk);
  // print the lines of desk that differ from ci, with their section headers
  std::string section;
  size_t pa = 0, pb = 0;
  while (pb < b.size()) {
    size_t eb = b.find('\n', pb), ea = a.find('\n', pa);
    std::string lb = b.substr(pb, eb - pb), la = a.substr(pa, ea - pa);
    if (!lb.empty() && lb[0] == '[') section = lb;
    if (lb != la) {
      if (!section.empty()) std::printf("%s\n", section.c_str());
      section.clear();
      std::printf("%s\n", lb.c_str());
    }
    pa = ea + 1;
    pb = eb + 1;
  }
  std::printf("```\n");
}
