#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "pathlet/bvae.hpp"
#include "pathlet/dictlearn.hpp"
#include "pathlet/eval.hpp"
#include "pathlet/spatial.hpp"
#include "pathlet/trainer.hpp"

namespace pathlet {

/// One `{"units":[...],"t":float|null}` object per line; blank lines are skipped.
/// Throws InputError with the line number on malformed input.
std::vector<Trajectory> read_corpus(std::istream& in);
void write_corpus(std::ostream& out, std::span<const Trajectory> corpus);
std::vector<Trajectory> read_corpus_file(const std::filesystem::path& path);
void write_corpus_file(const std::filesystem::path& path, std::span<const Trajectory> corpus);

/// Domain description as JSON (kind plus grid bounds or edge successor lists).
std::string domain_to_json(const SpatialDomain& dom);
SpatialDomain domain_from_json(const std::string& text);

/// `{"num_units":E,"atoms":[[unit,...],...]}` with each atom's units sorted.
std::string dictionary_to_json(const PathletDictionary& D);
PathletDictionary dictionary_from_json(const std::string& text);

/// `{"num_atoms":n,"num_trajectories":N,"columns":[[atom,...],...]}`.
std::string representation_to_json(const RepresentationMatrix& R);
RepresentationMatrix representation_from_json(const std::string& text);

/// JSON header line, then every parameter as a little-endian float64 in
/// flatten() order.
void write_vae(std::ostream& out, const VaeModel& model);
VaeModel read_vae(std::istream& in);

/// iteration,recon,dict_term,sparsity_term,elbo,total
void write_log_csv(std::ostream& out, std::span<const TrainingLogEntry> log);
std::vector<TrainingLogEntry> read_log_csv(std::istream& in);

/// dict.json, vae.model, repr.json, log.csv, config.txt and domain.json.
void save_checkpoint(const std::filesystem::path& dir, const TrainedModel& model);
TrainedModel load_checkpoint(const std::filesystem::path& dir);
/// FNV-1a over dict.json and vae.model.
std::uint64_t checkpoint_hash(const std::filesystem::path& dir);

std::string eval_report_to_json(const EvalReport& report);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace pathlet
