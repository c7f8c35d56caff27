#pragma once

#include <string>

#include "qmix/datagen.hpp"

namespace qmix {

// Container layout: u32 header length (LE), JSON header, binary payload.
// The header carries generator, params, seed, payload kind, dimensions,
// counts and labels; the payload is the per-record complex/real f64
// encoding shared with the wire protocol.
void save_dataset(const LabeledDataset& ds, const std::string& path);
LabeledDataset load_dataset(const std::string& path);

// Genotype datasets as CSV: sample_index, label, g0..g{n-1}.
void export_genotypes_csv(const LabeledDataset& ds, const std::string& path);

}  // namespace qmix
