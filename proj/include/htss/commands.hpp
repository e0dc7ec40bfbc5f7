#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "htss/config.hpp"
#include "htss/relations.hpp"
#include "htss/taxonomy.hpp"
#include "htss/types.hpp"

namespace htss {

struct TaxonomyBuild {
  Taxonomy taxonomy;
  AtomPartition partition;
  bool partitioned = false;
  std::vector<Violation> violations;
};

/// Atoms, group sets, validation and (optionally) the subclass partition.
/// A non-empty `atoms` list replaces atom extraction.
TaxonomyBuild build_taxonomy(std::span<const LabelSpace> spaces, const RelationTable& relations, bool partition,
                             std::vector<std::string> atoms = {});

// Each command reads its keys from the config, writes under `out`, and
// throws htss::Error on failure.
void cmd_gen(const RunConfig& config);
void cmd_taxonomy(const RunConfig& config);
void cmd_pseudolabel(const RunConfig& config);
void cmd_train(const RunConfig& config);
void cmd_eval(const RunConfig& config);

/// Runs the named command; unknown names are config errors.
void run_command(std::string_view name, const RunConfig& config);

}  // namespace htss
