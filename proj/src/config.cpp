#include "htss/config.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include "htss/error.hpp"
#include "htss/io.hpp"

namespace htss {

namespace {

constexpr ConfigKey kKeys[] = {
    {"seed", "0", "master seed for every random draw"},
    {"out", "out", "output directory"},
    {"world", "", "gen: world spec (JSON)"},
    {"manifests", "", "taxonomy/pseudolabel/train: comma-separated dataset manifests"},
    {"label_spaces", "", "taxonomy: label space files (alternative to manifests)"},
    {"relations", "", "relation table (TSV); empty means no relations"},
    {"atoms", "", "taxonomy: use this comma-separated atom list instead of extracting one"},
    {"partition", "false", "split weak-only atoms into a subclass head"},
    {"taxonomy", "", "train/eval/pseudolabel: taxonomy file; train builds one when empty"},
    {"quotas", "", "train: images per step and dataset, e.g. A:2,B:1; empty means 1 each"},
    {"features", "8", "train: hidden channels of the network"},
    {"lr", "0.05", "train: learning rate"},
    {"momentum", "0.9", "train: SGD momentum"},
    {"init_scale", "0.05", "train: uniform init range [-s, s]"},
    {"epochs", "1", "train: passes over the largest dataset"},
    {"max_steps", "0", "train: step cap, 0 for none"},
    {"refine_threshold", "0.9", "train/pseudolabel: confidence threshold for weak canvases"},
    {"refine_warmup", "0", "train: initial steps that use unrefined weak canvases"},
    {"checkpoint_every", "0", "train: also save a checkpoint every N steps"},
    {"checkpoint", "", "eval/pseudolabel: trained model"},
    {"eval_manifest", "", "eval: pixel-labeled dataset to predict and score"},
    {"gt", "", "eval: comma-separated ground-truth label files"},
    {"pred", "", "eval: comma-separated prediction label files"},
    {"label_space", "", "eval: label space of gt/pred"},
    {"n_t", "10", "eval: number of knowledgeability thresholds"},
    {"c_values", "", "eval: comma-separated c values; empty means the number of classes"},
};

const ConfigKey* find_key(std::string_view name) {
  for (const auto& k : kKeys) {
    if (k.name == name) return &k;
  }
  return nullptr;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view want) {
  throw Error(ErrorCode::config, "'" + std::string(key) + "' = '" + std::string(value) + "' is not " + std::string(want));
}

template <typename T>
T parse_number(std::string_view key, std::string_view text, std::string_view want) {
  T v{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) bad_value(key, text, want);
  return v;
}

}  // namespace

std::span<const ConfigKey> config_keys() { return kKeys; }

RunConfig::RunConfig() {
  for (const auto& k : kKeys) values_.emplace(k.name, k.default_value);
}

RunConfig RunConfig::parse(std::string_view text) {
  RunConfig config;
  std::istringstream in{std::string(text)};
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::config, "line " + std::to_string(number) + ": expected 'key = value'");
    }
    config.set(trim(std::string_view(body).substr(0, eq)), trim(std::string_view(body).substr(eq + 1)));
  }
  return config;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  if (!std::filesystem::is_regular_file(path)) throw Error(ErrorCode::config, "config file not found: " + path.string());
  return parse(read_text(path));
}

void RunConfig::set(std::string_view key, std::string_view value) {
  if (!find_key(key)) throw Error(ErrorCode::config, "unknown key '" + std::string(key) + "'");
  values_.insert_or_assign(std::string(key), trim(value));
}

const std::string& RunConfig::get(std::string_view key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw Error(ErrorCode::config, "unknown key '" + std::string(key) + "'");
  return it->second;
}

std::int64_t RunConfig::get_int(std::string_view key) const {
  return parse_number<std::int64_t>(key, get(key), "an integer");
}

std::uint64_t RunConfig::get_seed() const { return parse_number<std::uint64_t>("seed", get("seed"), "an unsigned integer"); }

double RunConfig::get_double(std::string_view key) const {
  const double v = parse_number<double>(key, get(key), "a number");
  if (!std::isfinite(v)) bad_value(key, get(key), "a finite number");
  return v;
}

bool RunConfig::get_bool(std::string_view key) const {
  const std::string& v = get(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  bad_value(key, v, "a boolean");
}

std::vector<std::string> RunConfig::get_list(std::string_view key) const {
  std::vector<std::string> out;
  std::string_view rest = get(key);
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    std::string item = trim(rest.substr(0, comma));
    if (item.empty()) bad_value(key, get(key), "a comma-separated list");
    out.push_back(std::move(item));
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  return out;
}

std::vector<std::pair<std::string, int>> RunConfig::get_quotas(std::string_view key) const {
  std::vector<std::pair<std::string, int>> out;
  for (const auto& item : get_list(key)) {
    const auto colon = item.rfind(':');
    if (colon == std::string::npos || colon == 0) bad_value(key, item, "of the form dataset:count");
    out.emplace_back(trim(std::string_view(item).substr(0, colon)),
                     parse_number<int>(key, trim(std::string_view(item).substr(colon + 1)), "a count"));
  }
  return out;
}

std::filesystem::path RunConfig::existing_path(std::string_view key) const {
  const std::string& v = get(key);
  if (v.empty()) throw Error(ErrorCode::config, "'" + std::string(key) + "' must be set");
  if (!std::filesystem::exists(v)) throw Error(ErrorCode::config, "'" + std::string(key) + "': file not found: " + v);
  return v;
}

std::string RunConfig::dump() const {
  std::ostringstream out;
  for (const auto& k : kKeys) {
    out << "# " << k.help << " (default: " << (k.default_value.empty() ? "empty" : k.default_value) << ")\n";
    out << k.name << " = " << get(k.name) << '\n';
  }
  return out.str();
}

}  // namespace htss
