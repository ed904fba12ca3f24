#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "prf/types.hpp"

namespace prf::align {

/// Aligned coding DNA from two species; record order is input order.
struct Alignment {
  std::vector<std::string> ids;
  std::vector<std::string> seqs;  // uppercase over {A,C,G,T,-,N}
  std::vector<int> species;       // 1 or 2, parallel to ids
  int frame_offset = 0;           // leading bases before the first codon

  std::size_t length() const { return seqs.empty() ? 0 : seqs.front().size(); }
  int count(int sp) const;
  void validate() const;  // throws std::invalid_argument
};

/// Parse FASTA text.  species_map must assign every record id to 1 or 2;
/// ids are the first whitespace-delimited token of each header line.
Alignment parse_alignment(const std::string& fasta,
                          const std::map<std::string, int>& species_map,
                          int frame_offset = 0);

/// Build a species map from two comma-separated id lists.
std::map<std::string, int> species_map_from_lists(const std::string& species1_csv,
                                                  const std::string& species2_csv);

/// Build a species map from two-column TSV lines "id<TAB>1|2" ('#' comments ok).
std::map<std::string, int> species_map_from_tsv(const std::string& text);

enum class Variation {
  Monomorphic,
  FixedDifference,
  PolymorphicOne,   // polymorphic in exactly one species
  PolymorphicBoth,  // the same two alleles segregate in both species
  Excluded,
};

enum class Coding {
  NotApplicable,  // monomorphic sites carry no mutation to classify
  Silent,
  Replacement,
  Excluded,
};

struct SiteClass {
  Variation variation = Variation::Monomorphic;
  Coding coding = Coding::NotApplicable;
  std::string reason;         // exclusion reason; empty when not excluded
  char wild = 0, mutant = 0;  // polarized alleles (polymorphic sites only)
};

struct SiteClassification {
  int m = 0, n = 0;  // sample sizes carried into the tables
  std::vector<SiteClass> sites;  // one entry per alignment column
  std::map<std::string, int> exclusion_census;  // reason -> #sites

  std::size_t count(Variation v) const;
  std::size_t count(Coding c) const;
  /// Every column classified once per axis; census matches the reasons.
  void validate() const;
};

/// Per-column joint classification.  Exclusion rules, in order: sites outside
/// the reading frame; columns with a gap or N; columns with more than two
/// distinct nucleotides; intact sites of codons containing an excluded site;
/// codons with two or more polymorphic sites; shared polymorphisms whose
/// silent/replacement call differs between the species.
///
/// Polarity: the pooled minor allele is deemed the mutant; ties break toward
/// species 1's majority allele as wild type, then alphabetically.  The
/// silent/replacement call itself compares amino acids of the codon pair and
/// does not depend on polarity.
SiteClassification classify_sites(const Alignment& a);

struct TablePair {
  CountTable dohrs;
  CountTable dprs;
};

TablePair count_tables(const SiteClassification& c,
                       bool dprs_double_count_shared = false);

/// Standard genetic code; codon must be 3 of ACGT.  '*' marks a stop.
char translate_codon(const char* codon);

}  // namespace prf::align
