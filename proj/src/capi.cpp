#include "htss/htss.h"

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <memory>
#include <new>
#include <spdlog/spdlog.h>
#include <string>

#include "htss/commands.hpp"
#include "htss/config.hpp"
#include "htss/error.hpp"
#include "htss/io.hpp"
#include "htss/lossgrad.hpp"
#include "htss/metrics.hpp"

struct htss_config {
  htss::RunConfig config;
};

struct htss_taxonomy {
  htss::TaxonomyBuild build;
  std::vector<htss::LabelSpace> spaces;
};

namespace {

thread_local std::string last_error;

htss_status fail(htss_status status, std::string message) {
  last_error = std::move(message);
  return status;
}

template <typename Fn>
htss_status guarded(Fn&& fn) {
  try {
    fn();
    last_error.clear();
    return HTSS_OK;
  } catch (const htss::Error& e) {
    return fail(static_cast<htss_status>(htss::exit_category(e.code())), e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(HTSS_ERR_DATA, e.what());
  } catch (const std::bad_alloc&) {
    return fail(HTSS_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(HTSS_ERR_INTERNAL, e.what());
  }
}

htss_status null_argument(const char* name) {
  return fail(HTSS_ERR_CONFIG, std::string("invalid_argument: ") + name + " is NULL");
}

void copy_out(const std::string& text, char* buf, size_t cap, size_t* len) {
  if (len) *len = text.size();
  if (buf && cap > text.size()) std::memcpy(buf, text.c_str(), text.size() + 1);
}

}  // namespace

extern "C" {

const char* htss_version(void) { return "0.1.0"; }

const char* htss_last_error(void) { return last_error.c_str(); }

htss_status htss_set_log_level(const char* level) {
  if (!level) return null_argument("level");
  const auto parsed = spdlog::level::from_str(level);
  if (parsed == spdlog::level::off && std::strcmp(level, "off") != 0) {
    return fail(HTSS_ERR_CONFIG, std::string("config: unknown log level '") + level + "'");
  }
  spdlog::set_level(parsed);
  return HTSS_OK;
}

htss_status htss_config_create(htss_config** out) {
  if (!out) return null_argument("out");
  return guarded([&] { *out = new htss_config{}; });
}

void htss_config_destroy(htss_config* config) { delete config; }

htss_status htss_config_load(htss_config* config, const char* path) {
  if (!config) return null_argument("config");
  if (!path) return null_argument("path");
  return guarded([&] { config->config = htss::RunConfig::load(path); });
}

htss_status htss_config_set(htss_config* config, const char* key, const char* value) {
  if (!config) return null_argument("config");
  if (!key || !value) return null_argument("key/value");
  return guarded([&] { config->config.set(key, value); });
}

htss_status htss_config_get(const htss_config* config, const char* key, char* buf, size_t cap, size_t* len) {
  if (!config) return null_argument("config");
  if (!key) return null_argument("key");
  return guarded([&] { copy_out(config->config.get(key), buf, cap, len); });
}

htss_status htss_config_dump(const htss_config* config, char* buf, size_t cap, size_t* len) {
  if (!config) return null_argument("config");
  return guarded([&] { copy_out(config->config.dump(), buf, cap, len); });
}

htss_status htss_run(const char* command, const htss_config* config) {
  if (!command) return null_argument("command");
  if (!config) return null_argument("config");
  return guarded([&] { htss::run_command(command, config->config); });
}

htss_status htss_taxonomy_build(const char* const* label_space_paths, size_t count, const char* relations_path,
                                int partition, htss_taxonomy** out) {
  if (!out) return null_argument("out");
  if (!label_space_paths && count > 0) return null_argument("label_space_paths");
  return guarded([&] {
    auto t = std::make_unique<htss_taxonomy>();
    for (size_t i = 0; i < count; ++i) t->spaces.push_back(htss::read_label_space(label_space_paths[i]));
    const htss::RelationTable relations = relations_path ? htss::read_relations(relations_path) : htss::RelationTable{};
    t->build = htss::build_taxonomy(t->spaces, relations, partition != 0);
    *out = t.release();
  });
}

void htss_taxonomy_destroy(htss_taxonomy* taxonomy) { delete taxonomy; }

size_t htss_taxonomy_atom_count(const htss_taxonomy* taxonomy) {
  return taxonomy ? taxonomy->build.taxonomy.atoms.size() : 0;
}

const char* htss_taxonomy_atom(const htss_taxonomy* taxonomy, size_t index) {
  if (!taxonomy || index >= taxonomy->build.taxonomy.atoms.size()) return nullptr;
  return taxonomy->build.taxonomy.atoms[index].c_str();
}

size_t htss_taxonomy_violation_count(const htss_taxonomy* taxonomy) {
  return taxonomy ? taxonomy->build.violations.size() : 0;
}

htss_status htss_taxonomy_write(const htss_taxonomy* taxonomy, const char* path) {
  if (!taxonomy) return null_argument("taxonomy");
  if (!path) return null_argument("path");
  return guarded([&] {
    const auto& b = taxonomy->build;
    htss::write_text(path, htss::format_taxonomy(b.taxonomy, taxonomy->spaces, b.partitioned ? &b.partition : nullptr));
  });
}

htss_status htss_group_ce(int height, int width, int atoms, const double* logits, int classes, const double* target,
                          const int* group_offsets, const int* group_atoms, double* loss, double* grad) {
  if (!logits || !target || !group_offsets || !loss) return null_argument("logits/target/group_offsets/loss");
  if (height < 1 || width < 1 || atoms < 1 || classes < 1) {
    return fail(HTSS_ERR_CONFIG, "invalid_argument: sizes must be positive");
  }
  return guarded([&] {
    const auto n = static_cast<std::size_t>(height) * width;
    htss::LogitRaster lg(height, width, atoms);
    std::copy(logits, logits + n * atoms, lg.values.begin());
    htss::PseudoCanvas canvas(height, width, classes + 1);
    std::copy(target, target + n * (classes + 1), canvas.values.begin());
    htss::GroupMap groups;
    for (int m = 0; m < classes; ++m) {
      const int lo = group_offsets[m];
      const int hi = group_offsets[m + 1];
      if (lo < 0 || hi < lo || (hi > lo && !group_atoms)) {
        throw htss::Error(htss::ErrorCode::invalid_argument, "bad group offsets");
      }
      htss::AtomSet g(group_atoms + lo, group_atoms + hi);
      for (int a : g) {
        if (a < 0 || a >= atoms) throw htss::Error(htss::ErrorCode::index_out_of_range, "group atom out of range");
      }
      std::sort(g.begin(), g.end());
      groups.classes.push_back(std::move(g));
    }
    const htss::AtomDistribution dist = htss::softmax_atoms(lg);
    *loss = htss::ce_loss_image(canvas, dist, groups);
    if (grad) {
      const htss::LogitRaster g = htss::grad_logits(canvas, dist, groups);
      std::copy(g.values.begin(), g.values.end(), grad);
    }
  });
}

htss_status htss_knowledgeability(const double* ious, size_t count, int c, int n_t, double* out) {
  if ((!ious && count > 0) || !out) return null_argument("ious/out");
  return guarded([&] { *out = htss::knowledgeability(std::span<const double>(ious, count), c, n_t); });
}

}  // extern "C"
