#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "htss/annotations.hpp"
#include "htss/model.hpp"
#include "htss/relations.hpp"
#include "htss/taxonomy.hpp"
#include "htss/types.hpp"

namespace htss {

namespace fs = std::filesystem;

std::string read_text(const fs::path& path);
/// Creates parent directories; replaces the file.
void write_text(const fs::path& path, const std::string& text);

// Label space: {"dataset_id": ..., "supervision": ..., "classes": ["void", ...]}
LabelSpace read_label_space(const fs::path& path);
void write_label_space(const fs::path& path, const LabelSpace& space);

// Relations: one `kind<TAB>subject<TAB>object` per line; '#' starts a comment.
RelationTable parse_relations(const std::string& text);
RelationTable read_relations(const fs::path& path);
std::string format_relations(const RelationTable& table);

// Weak labels: lines `class x_min y_min x_max y_max`, plus `tags: c1 c2 ...`.
WeakLabel parse_weak_label(const std::string& text);
WeakLabel read_weak_label(const fs::path& path);
std::string format_weak_label(const WeakLabel& label);

enum class Granularity { fine, coarse };
const char* to_string(Granularity g);
Granularity parse_granularity(std::string_view text);

struct ManifestRecord {
  fs::path image;
  fs::path label;
};

/// Paths are stored relative to the manifest file and resolved on load.
struct DatasetManifest {
  std::string dataset_id;
  Supervision supervision = Supervision::pixel_dense;
  Granularity granularity = Granularity::fine;
  fs::path label_space;
  std::vector<ManifestRecord> records;
};

DatasetManifest read_manifest(const fs::path& path);
void write_manifest(const fs::path& path, const DatasetManifest& manifest);

/// Taxonomy export: canonical atoms, then per dataset `class -> [atoms]`,
/// plus the atom partition when one is given.
std::string format_taxonomy(const Taxonomy& taxonomy, std::span<const LabelSpace> spaces,
                            const AtomPartition* partition);

struct TaxonomyDocument {
  Taxonomy taxonomy;
  std::optional<AtomPartition> partition;
};

TaxonomyDocument read_taxonomy(const fs::path& path);

// Checkpoint: "HTSSCKPT", u32 version, u32 in_channels/features/outputs,
// then f64 tensors (conv1 w, b, conv2 w, b, head w, b), little-endian.
inline constexpr std::uint32_t kCheckpointVersion = 1;
void write_checkpoint(const fs::path& path, const MicroNetParams& params);
MicroNetParams read_checkpoint(const fs::path& path);

/// "step,loss" CSV with round-trip precision.
std::string format_loss_csv(std::span<const double> losses);

}  // namespace htss
