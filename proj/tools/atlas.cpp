// SPDX-License-Identifier: Apache-2.0
//
// atlas: config-driven pipeline from prompts to locked-number checks.
#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "atlas/activation_dump.hpp"
#include "atlas/concept_space.hpp"
#include "atlas/decomposition.hpp"
#include "atlas/ingest.hpp"
#include "atlas/locked_claims.hpp"
#include "atlas/mask_engine.hpp"
#include "atlas/mask_store.hpp"
#include "atlas/prompt_corpus.hpp"
#include "atlas/promptgen.hpp"
#include "atlas/report.hpp"
#include "atlas/run_config.hpp"
#include "atlas/structure.hpp"
#include "atlas/synth.hpp"
#include "atlas/util.hpp"

namespace fs = std::filesystem;
using namespace atlas;

namespace {

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::vector<double> eps;
  std::vector<double> consistency;
  std::optional<std::size_t> layer;
  std::optional<std::size_t> k;
  std::string out;
  std::string corpus, dump, store;
};

RunConfig resolve(const Flags& f) {
  RunConfig c = f.config.empty() ? RunConfig{} : RunConfig::load(f.config);
  if (f.seed) c.seed = *f.seed;
  if (!f.eps.empty()) c.epsilons = f.eps;
  if (!f.consistency.empty()) c.consistencies = f.consistency;
  if (f.layer) c.layer = *f.layer;
  if (f.k) c.k = *f.k;
  if (!f.out.empty()) c.out = f.out;
  if (!f.corpus.empty()) c.corpus = f.corpus;
  if (!f.dump.empty()) c.dump = f.dump;
  if (!f.store.empty()) c.store = f.store;
  c.validate();
  return c;
}

// Smallest epsilon with the largest consistency: the loosest threshold under
// the strictest filter.
SweepSetting focus_setting(const RunConfig& c) {
  return {*std::min_element(c.epsilons.begin(), c.epsilons.end()),
          *std::max_element(c.consistencies.begin(), c.consistencies.end())};
}

SweepSetting group_setting(const RunConfig& c) {
  return {*std::max_element(c.epsilons.begin(), c.epsilons.end()),
          *std::max_element(c.consistencies.begin(), c.consistencies.end())};
}

MaskStore load_store(const RunConfig& c) {
  const auto path = c.store_path();
  if (!fs::exists(path)) throw std::runtime_error("mask store not found: " + path.string() + " (run sweep first)");
  return MaskStore::load(path);
}

void write_output(CommandManifest& m, const fs::path& path, std::string_view text) {
  write_file(path, text);
  m.add_output(path);
}

int gen_prompts(const RunConfig& c) {
  const auto space = c.space();
  const PromptGenerator gen(GeneratorResources::load(default_data_dir()));
  std::optional<std::map<std::string, double>> losses;
  if (!c.losses.empty()) losses = load_losses(c.losses);
  std::optional<ModelTokenizerView> view;
  if (!c.tokens.empty()) view = ModelTokenizerView::load(c.tokens);

  const auto ps = pairs(space);
  const auto objects = testable_objects(space);
  std::vector<PromptSet> sets(ps.size() + objects.size());
  parallel_for(sets.size(), [&](std::size_t i) {
    if (i < ps.size())
      sets[i] = gen.generate_object_prompts(ps[i], c.object_prompts, c.seed, losses ? &*losses : nullptr);
    else if (c.checker_prompts > 0)
      sets[i] = gen.generate_checker_prompts(*objects[i - ps.size()], c.checker_prompts, c.seed,
                                             view ? &*view : nullptr);
  });
  const auto prompts = flatten(sets);
  const auto path = c.corpus_path();
  fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
  write_corpus(path, prompts);

  std::size_t n_object = 0;
  for (const auto& p : prompts) n_object += p.kind == PromptKind::object;
  CommandManifest m("gen-prompts", c);
  if (losses) m.add_input(c.losses);
  if (view) m.add_input(c.tokens);
  m.add_output(path);
  m.set("object_prompts", n_object);
  m.set("checker_prompts", prompts.size() - n_object);
  m.save(c.out);
  std::cout << "wrote " << n_object << " object + " << prompts.size() - n_object << " checker prompts to "
            << path.string() << "\n";
  return 0;
}

int synth(const RunConfig& c) {
  const auto space = c.space();
  const auto spec = presets::by_name(c.synth_preset, space, c.seed, c.background_density);
  const auto ids = synthetic_prompt_ids(space, c.object_prompts, c.checker_prompts);
  const auto path = c.dump_path();
  fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
  PlantOptions opt;
  opt.grid = c.grid();
  const auto truth = plant(spec, ids, path, opt);

  fs::create_directories(c.out);
  const auto truth_path = c.out / "truth.acsm";
  truth.to_store(opt.grid).save(truth_path);
  CommandManifest m("synth", c);
  m.add_output(path);
  m.add_output(manifest_path_for(path));
  m.add_output(truth_path);
  m.set("records", ids.size());
  m.save(c.out);
  std::cout << "wrote " << ids.size() << " records (" << c.synth_preset << ", q=" << format_double(c.background_density)
            << ") to " << path.string() << "\n";
  return 0;
}

int sweep(const RunConfig& c) {
  const auto space = c.space();
  const auto dump_path = c.dump_path();
  const auto dump = ActivationDump::open(dump_path);
  SweepOptions opt;
  opt.grid = c.grid();
  opt.checker_masks = c.checker_masks;
  SweepResult r;
  try {
    r = run_sweep(dump, space, opt);
  } catch (const CoverageError& e) {
    std::cerr << "atlas: error: " << e.what() << "\n";
    for (const auto& k : e.missing()) std::cerr << "  missing " << k << "\n";
    return 1;
  }
  const auto store_path = c.store_path();
  fs::create_directories(store_path.parent_path().empty() ? "." : store_path.parent_path());
  r.store.save(store_path);

  fs::create_directories(c.out);
  CommandManifest m("sweep", c);
  m.add_input(dump_path);
  m.add_output(store_path);
  if (fs::exists(magnitude_path_for(store_path))) m.add_output(magnitude_path_for(store_path));
  if (opt.universal_circuits) {
    std::string tsv = "concept\tepsilon\tconsistency";
    for (std::size_t l = 0; l < kLayerCount; ++l) tsv += "\tL" + std::to_string(l);
    tsv += "\n";
    for (const auto& row : r.universal_report) {
      tsv += row.concept_id + "\t" + format_double(row.setting.epsilon) + "\t" +
             format_double(row.setting.consistency);
      for (auto n : row.sizes) tsv += "\t" + std::to_string(n);
      tsv += "\n";
    }
    write_output(m, c.out / "nonempty.tsv", tsv);
  }
  nlohmann::json counts = nlohmann::json::object();
  for (const auto& [s, n] : r.pair_layer_nonempty) {
    counts[s.label()] = {n.first, n.second};
    std::cout << "pair-layer masks non-empty at " << s.label() << ": " << n.first << " of " << n.second << "\n";
  }
  m.set("records_read", r.records_read);
  m.set("pair_layer_nonempty", counts);
  m.save(c.out);
  std::cout << "read " << r.records_read << " records; wrote " << r.store.size() << " masks to "
            << store_path.string() << "\n";
  return 0;
}

int decompose_cmd(const RunConfig& c) {
  const auto space = c.space();
  const auto store = load_store(c);
  const auto ds = decompose_store(store, space);
  fs::create_directories(c.out);
  CommandManifest m("decompose", c);
  m.add_input(c.store_path());
  const auto table = c.out / "decomposition.tsv";
  write_decomposition_table(table, ds);
  m.add_output(table);
  m.add_output(index_path_for(table));
  write_output(m, c.out / "sweep.tsv", sweep_table(store, space, c.aggregation));
  write_output(m, c.out / "layers.tsv", layer_table(store, space, focus_setting(c), c.aggregation));
  m.save(c.out);
  std::cout << "wrote " << ds.size() << " decompositions to " << table.string() << "\n";
  return 0;
}

int cluster(const RunConfig& c) {
  const auto space = c.space();
  const auto store = load_store(c);
  const auto s = focus_setting(c);
  std::vector<std::string> labels;
  for (const auto* x : space.all()) labels.push_back(x->id);
  const auto dm = DistanceMatrix::jaccard(labels, concept_only_sets(store, space, s, c.layer));
  const auto tree = ward_linkage(dm);
  const auto part = cut(tree, c.k);

  fs::create_directories(c.out);
  CommandManifest m("cluster", c);
  m.add_input(c.store_path());
  write_output(m, c.out / "dendrogram.json", dendrogram_json(tree, dm.empty_leaves()));
  write_output(m, c.out / "dendrogram.dot", dendrogram_dot(tree));
  write_output(m, c.out / "partition.tsv", partition_tsv(tree, part));

  std::string verdict = "not-applicable";
  const auto& mods = ConceptSpace::modular_ids();
  if (std::all_of(mods.begin(), mods.end(), [&](const std::string& id) { return space.find(id); })) {
    const auto a = atomicity_check(tree, part, mods);
    verdict = a.single_cluster ? "single-cluster" : "split-across-" + std::to_string(a.clusters);
  }
  m.set("setting", s.label());
  m.set("atomicity", verdict);
  m.save(c.out);
  std::cout << "clustered " << labels.size() << " concepts at " << s.label() << " L" << c.layer << ", k=" << c.k
            << "; atomicity: " << verdict << "\n";
  if (!dm.empty_leaves().empty())
    std::cout << dm.empty_leaves().size() << " concepts have an empty concept-only set\n";
  return 0;
}

int report(const RunConfig& c) {
  const auto space = c.space();
  const auto store = load_store(c);
  ReportOptions o;
  o.setting = focus_setting(c);
  o.group_setting = group_setting(c);
  o.aggregation = c.aggregation;
  fs::create_directories(c.out);
  CommandManifest m("report", c);
  m.add_input(c.store_path());
  const auto text = format_report(store, space, o);
  write_output(m, c.out / "report.txt", text);
  write_output(m, c.out / "nonempty_matrix.tsv", nonemptiness_matrix(store, space, o.setting));
  write_output(m, c.out / "tiers.tsv", tier_summary(store, space, o.setting));
  write_output(m, c.out / "layers.tsv", layer_table(store, space, o.setting, o.aggregation));
  write_output(m, c.out / "sweep.tsv", sweep_table(store, space, o.aggregation));
  write_output(m, c.out / "groups.tsv", group_table(store, space, o.group_setting, o.group_layer));
  m.save(c.out);
  std::cout << text;
  return 0;
}

int verify(const RunConfig& c, bool strict, bool released) {
  const auto space = c.space();
  const auto path = c.store_path();
  const MaskStore store = fs::exists(path) ? MaskStore::load(path) : MaskStore{};
  LockedOptions o;
  o.aggregation = c.aggregation;
  o.released_checks = released;
  const auto results = verify_locked(store, space, o);
  const auto text = format_claims(results);
  fs::create_directories(c.out);
  CommandManifest m("verify-locked", c);
  if (fs::exists(path)) m.add_input(path);
  write_output(m, c.out / "claims.tsv", text);
  m.set("all_passed", all_passed(results));
  m.save(c.out);
  std::cout << text;
  return strict && !all_passed(results) ? 1 : 0;
}

int ingest(const RunConfig& c, const fs::path& dir) {
  const auto space = c.space();
  const auto store = ingest_released(dir, space);
  const auto path = c.store_path();
  fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
  store.save(path);
  fs::create_directories(c.out);
  CommandManifest m("ingest-released", c);
  for (const auto kind : {MaskKind::universal, MaskKind::checker, MaskKind::pair})
    if (fs::exists(dir / released_file_name(kind))) m.add_input(dir / released_file_name(kind));
  m.add_output(path);
  m.save(c.out);
  std::cout << "ingested " << store.size() << " masks into " << path.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Concept circuit atlas: prompts, masks, decompositions and structure"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", std::string(tool_version()));

  Flags f;
  app.add_option("--config", f.config, "JSON run config (a command manifest also works)");
  app.add_option("--seed", f.seed, "Root seed");
  app.add_option("--eps", f.eps, "Epsilon grid")->delimiter(',');
  app.add_option("--consistency", f.consistency, "Consistency grid, fractions in (0, 1]")->delimiter(',');
  app.add_option("--layer", f.layer, "Layer for clustering");
  app.add_option("--k", f.k, "Number of clusters");
  app.add_option("--out", f.out, "Output directory for tables and manifests");
  app.add_option("--corpus", f.corpus, "Prompt corpus path");
  app.add_option("--dump", f.dump, "Activation dump path");
  app.add_option("--store", f.store, "Mask store path");

  auto* gen = app.add_subcommand("gen-prompts", "Generate the object and checker prompt corpus");
  auto* syn = app.add_subcommand("synth", "Write a synthetic activation dump with planted circuits");
  auto* swp = app.add_subcommand("sweep", "Binarise, filter and marginalise a dump into a mask store");
  auto* dec = app.add_subcommand("decompose", "Partition circuits into concept-only and shared neurons");
  auto* clu = app.add_subcommand("cluster", "Ward clustering of concept-only sets at one layer");
  auto* rep = app.add_subcommand("report", "Summary tables and the non-emptiness matrix");
  auto* ver = app.add_subcommand("verify-locked", "Check the locked reference claims against a store");
  auto* ing = app.add_subcommand("ingest-released", "Read a released mask directory into a store");

  bool strict = false, released = false;
  ver->add_flag("--strict", strict, "Exit non-zero unless every claim passes");
  ver->add_flag("--released", released, "Also check the released-artifact sweep row");
  std::string ingest_dir;
  ing->add_option("dir", ingest_dir, "Directory with universal_masks.tsv and checker_masks.tsv")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    const auto c = resolve(f);
    if (*gen) return gen_prompts(c);
    if (*syn) return synth(c);
    if (*swp) return sweep(c);
    if (*dec) return decompose_cmd(c);
    if (*clu) return cluster(c);
    if (*rep) return report(c);
    if (*ver) return verify(c, strict, released);
    if (*ing) return ingest(c, ingest_dir);
  } catch (const std::exception& e) {
    std::cerr << "atlas: error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
