// Command-line front end. Talks to the toolkit only through the C API.
#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "htss/htss.h"

namespace {

struct Options {
  std::string config_path;
  std::string seed;
  std::string out;
  std::vector<std::string> overrides;
  bool print_config = false;
};

int report(htss_status status) {
  if (status != HTSS_OK) std::fprintf(stderr, "htss: %s\n", htss_last_error());
  return static_cast<int>(status);
}

int run(const std::string& command, const Options& opt) {
  htss_config* config = nullptr;
  if (htss_status s = htss_config_create(&config); s != HTSS_OK) return report(s);
  struct Guard {
    htss_config* c;
    ~Guard() { htss_config_destroy(c); }
  } guard{config};

  if (!opt.config_path.empty()) {
    if (htss_status s = htss_config_load(config, opt.config_path.c_str()); s != HTSS_OK) return report(s);
  }
  for (const auto& kv : opt.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      std::fprintf(stderr, "htss: --set expects key=value, got '%s'\n", kv.c_str());
      return HTSS_ERR_CONFIG;
    }
    if (htss_status s = htss_config_set(config, kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str()); s != HTSS_OK) {
      return report(s);
    }
  }
  if (!opt.seed.empty()) {
    if (htss_status s = htss_config_set(config, "seed", opt.seed.c_str()); s != HTSS_OK) return report(s);
  }
  if (!opt.out.empty()) {
    if (htss_status s = htss_config_set(config, "out", opt.out.c_str()); s != HTSS_OK) return report(s);
  }

  if (opt.print_config) {
    size_t len = 0;
    htss_config_dump(config, nullptr, 0, &len);
    std::string text(len + 1, '\0');
    if (htss_status s = htss_config_dump(config, text.data(), text.size(), &len); s != HTSS_OK) return report(s);
    text.resize(len);
    std::fputs(text.c_str(), stdout);
    return 0;
  }
  return report(htss_run(command.c_str(), config));
}

}  // namespace

int main(int argc, char** argv) {
  if (const char* level = std::getenv("HTSS_LOG")) {
    if (htss_set_log_level(level) != HTSS_OK) std::fprintf(stderr, "htss: %s\n", htss_last_error());
  }

  CLI::App app{"Hierarchical semantic segmentation toolkit"};
  app.set_version_flag("--version", htss_version());
  app.require_subcommand(1);
  Options opt;

  const std::pair<const char*, const char*> commands[] = {
      {"gen", "generate synthetic datasets from a world spec"},
      {"taxonomy", "build and validate the unified label space"},
      {"pseudolabel", "write weak-label canvases for inspection"},
      {"train", "train the segmentation network"},
      {"eval", "score predictions (IoU, mIoU, knowledgeability)"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", opt.config_path, "key = value settings file")->check(CLI::ExistingFile);
    sub->add_option("--seed", opt.seed, "override the seed");
    sub->add_option("--out", opt.out, "override the output directory");
    sub->add_option("--set", opt.overrides, "override any key, key=value (repeatable)");
    sub->add_flag("--print-config", opt.print_config, "print the effective settings with defaults and exit");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : HTSS_ERR_CONFIG;
  }
  for (const auto& [name, help] : commands) {
    if (app.got_subcommand(name)) return run(name, opt);
  }
  return HTSS_ERR_CONFIG;
}
