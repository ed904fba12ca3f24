#include "prf/alignment.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <set>
#include <sstream>
#include <stdexcept>

namespace prf::align {

namespace {

constexpr const char* kBases = "ACGT";

int base_index(char c) {
  switch (c) {
    case 'A': return 0;
    case 'C': return 1;
    case 'G': return 2;
    case 'T': return 3;
    default: return -1;
  }
}

// column tallies for one species
struct ColumnCount {
  std::array<int, 4> base{};  // A,C,G,T
  int gaps = 0;
  int ns = 0;

  int distinct() const {
    int d = 0;
    for (int b : base) d += b > 0;
    return d;
  }
  int major() const {  // ties resolved alphabetically; callers refine
    int best = 0;
    for (int b = 1; b < 4; ++b)
      if (base[b] > base[best]) best = b;
    return best;
  }
};

}  // namespace

char translate_codon(const char* codon) {
  // index order T,C,A,G per axis
  static const char* kTable =
      "FFLLSSSSYY**CC*WLLLLPPPPHHQQRRRRIIIMTTTTNNKKSSRRVVVVAAAADDEEGGGG";
  auto tcag = [](char c) {
    switch (c) {
      case 'T': return 0;
      case 'C': return 1;
      case 'A': return 2;
      case 'G': return 3;
      default: throw std::invalid_argument("translate_codon: bad base");
    }
  };
  return kTable[16 * tcag(codon[0]) + 4 * tcag(codon[1]) + tcag(codon[2])];
}

int Alignment::count(int sp) const {
  return static_cast<int>(std::count(species.begin(), species.end(), sp));
}

void Alignment::validate() const {
  if (ids.size() < 2) throw std::invalid_argument("alignment: need >=2 records");
  if (ids.size() != seqs.size() || ids.size() != species.size())
    throw std::invalid_argument("alignment: ragged record vectors");
  const std::size_t len = seqs.front().size();
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    if (seqs[i].size() != len)
      throw std::invalid_argument("alignment: record '" + ids[i] + "' has length " +
                                  std::to_string(seqs[i].size()) + ", expected " +
                                  std::to_string(len));
    for (char c : seqs[i])
      if (base_index(c) < 0 && c != '-' && c != 'N')
        throw std::invalid_argument("alignment: record '" + ids[i] +
                                    "' contains unknown character '" +
                                    std::string(1, c) + "'");
    if (species[i] != 1 && species[i] != 2)
      throw std::invalid_argument("alignment: record '" + ids[i] +
                                  "' has species tag " + std::to_string(species[i]));
  }
  if (count(1) < 1) throw std::invalid_argument("alignment: species 1 is empty");
  if (count(2) < 1) throw std::invalid_argument("alignment: species 2 is empty");
  if (frame_offset < 0 || static_cast<std::size_t>(frame_offset) > len)
    throw std::invalid_argument("alignment: frame offset out of range");
}

Alignment parse_alignment(const std::string& fasta,
                          const std::map<std::string, int>& species_map,
                          int frame_offset) {
  Alignment a;
  a.frame_offset = frame_offset;
  std::istringstream in(fasta);
  std::string line;
  bool have_record = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '>') {
      std::string id = line.substr(1);
      const auto ws = id.find_first_of(" \t");
      if (ws != std::string::npos) id.resize(ws);
      if (id.empty()) throw std::invalid_argument("fasta: empty record id");
      if (std::find(a.ids.begin(), a.ids.end(), id) != a.ids.end())
        throw std::invalid_argument("fasta: duplicate record id '" + id + "'");
      a.ids.push_back(id);
      a.seqs.emplace_back();
      have_record = true;
    } else {
      if (!have_record)
        throw std::invalid_argument("fasta: sequence data before first header");
      for (char c : line) {
        if (std::isspace(static_cast<unsigned char>(c))) continue;
        a.seqs.back().push_back(
            static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
      }
    }
  }
  if (a.ids.empty()) throw std::invalid_argument("fasta: no records");
  a.species.reserve(a.ids.size());
  for (const auto& id : a.ids) {
    const auto it = species_map.find(id);
    if (it == species_map.end())
      throw std::invalid_argument("species map: record id '" + id + "' is unmapped");
    a.species.push_back(it->second);
  }
  a.validate();
  return a;
}

std::map<std::string, int> species_map_from_lists(const std::string& species1_csv,
                                                  const std::string& species2_csv) {
  std::map<std::string, int> out;
  auto add = [&out](const std::string& csv, int sp) {
    std::istringstream in(csv);
    std::string id;
    while (std::getline(in, id, ',')) {
      if (id.empty()) continue;
      if (!out.emplace(id, sp).second)
        throw std::invalid_argument("species map: id '" + id + "' listed twice");
    }
  };
  add(species1_csv, 1);
  add(species2_csv, 2);
  return out;
}

std::map<std::string, int> species_map_from_tsv(const std::string& text) {
  std::map<std::string, int> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw std::invalid_argument("species map: expected 'id<TAB>1|2', got: " + line);
    const std::string id = line.substr(0, tab);
    const std::string sp = line.substr(tab + 1);
    if (sp != "1" && sp != "2")
      throw std::invalid_argument("species map: species must be 1 or 2, got: " + sp);
    if (!out.emplace(id, sp == "1" ? 1 : 2).second)
      throw std::invalid_argument("species map: id '" + id + "' listed twice");
  }
  return out;
}

std::size_t SiteClassification::count(Variation v) const {
  return static_cast<std::size_t>(
      std::count_if(sites.begin(), sites.end(),
                    [v](const SiteClass& s) { return s.variation == v; }));
}

std::size_t SiteClassification::count(Coding c) const {
  return static_cast<std::size_t>(
      std::count_if(sites.begin(), sites.end(),
                    [c](const SiteClass& s) { return s.coding == c; }));
}

void SiteClassification::validate() const {
  std::size_t with_reason = 0, census = 0;
  for (const auto& s : sites) {
    if (!s.reason.empty()) ++with_reason;
    if ((s.variation == Variation::Excluded || s.coding == Coding::Excluded) !=
        !s.reason.empty())
      throw std::logic_error("site classification: exclusion without a reason");
  }
  for (const auto& [reason, n] : exclusion_census) census += n;
  if (with_reason != census)
    throw std::logic_error("site classification: census does not match sites");
}

namespace {

struct Columns {
  std::vector<std::array<ColumnCount, 2>> cols;  // per column, per species
};

Columns tally(const Alignment& a) {
  Columns t;
  t.cols.resize(a.length());
  for (std::size_t r = 0; r < a.seqs.size(); ++r) {
    const int sp = a.species[r] - 1;
    const std::string& s = a.seqs[r];
    for (std::size_t c = 0; c < s.size(); ++c) {
      if (s[c] == '-') ++t.cols[c][sp].gaps;
      else if (s[c] == 'N') ++t.cols[c][sp].ns;
      else ++t.cols[c][sp].base[base_index(s[c])];
    }
  }
  return t;
}

// Majority base of one species at a column; ties break toward the other
// species' majority when it is among the tied alleles, else alphabetically.
int majority(const std::array<ColumnCount, 2>& col, int sp) {
  const auto& mine = col[sp].base;
  const int top = *std::max_element(mine.begin(), mine.end());
  const int other_major = col[1 - sp].major();
  if (mine[other_major] == top && col[1 - sp].base[other_major] > 0)
    return other_major;
  for (int b = 0; b < 4; ++b)
    if (mine[b] == top) return b;
  return 0;
}

bool is_polymorphic(Variation v) {
  return v == Variation::PolymorphicOne || v == Variation::PolymorphicBoth;
}

}  // namespace

SiteClassification classify_sites(const Alignment& a) {
  a.validate();
  SiteClassification out;
  out.m = a.count(1);
  out.n = a.count(2);
  const std::size_t L = a.length();
  out.sites.resize(L);
  const auto t = tally(a);

  auto exclude = [&out](std::size_t site, const std::string& reason) {
    out.sites[site].variation = Variation::Excluded;
    out.sites[site].coding = Coding::Excluded;
    out.sites[site].reason = reason;
    ++out.exclusion_census[reason];
  };

  const std::size_t first = static_cast<std::size_t>(a.frame_offset);
  const std::size_t ncodons = (L - first) / 3;
  const std::size_t last = first + 3 * ncodons;

  for (std::size_t s = 0; s < L; ++s) {
    if (s < first || s >= last) {
      exclude(s, "frame");
      continue;
    }
    const auto& col = t.cols[s];
    if (col[0].gaps + col[1].gaps > 0) {
      exclude(s, "gap");
      continue;
    }
    if (col[0].ns + col[1].ns > 0) {
      exclude(s, "ambiguous_base");
      continue;
    }
    std::array<int, 4> pooled{};
    for (int b = 0; b < 4; ++b) pooled[b] = col[0].base[b] + col[1].base[b];
    std::vector<int> alleles;
    for (int b = 0; b < 4; ++b)
      if (pooled[b] > 0) alleles.push_back(b);
    if (alleles.size() > 2) {
      exclude(s, "more_than_two_alleles");
      continue;
    }
    SiteClass& sc = out.sites[s];
    const int d1 = col[0].distinct(), d2 = col[1].distinct();
    if (alleles.size() == 1) {
      sc.variation = Variation::Monomorphic;
      continue;
    }
    if (d1 == 1 && d2 == 1) sc.variation = Variation::FixedDifference;
    else if (d1 == 2 && d2 == 2) sc.variation = Variation::PolymorphicBoth;
    else sc.variation = Variation::PolymorphicOne;

    if (is_polymorphic(sc.variation)) {
      // pooled minor allele is the mutant; tie -> species 1 majority as wild
      int wild = alleles[0], mut = alleles[1];
      if (pooled[wild] < pooled[mut]) std::swap(wild, mut);
      else if (pooled[wild] == pooled[mut] &&
               col[0].base[mut] > col[0].base[wild])
        std::swap(wild, mut);
      sc.wild = kBases[wild];
      sc.mutant = kBases[mut];
    }
  }

  // codon-level rules
  for (std::size_t c = 0; c < ncodons; ++c) {
    const std::size_t s0 = first + 3 * c;
    bool has_excluded = false;
    int n_poly = 0;
    for (int k = 0; k < 3; ++k) {
      has_excluded |= out.sites[s0 + k].variation == Variation::Excluded;
      n_poly += is_polymorphic(out.sites[s0 + k].variation);
    }
    if (has_excluded) {
      for (int k = 0; k < 3; ++k)
        if (out.sites[s0 + k].variation != Variation::Excluded)
          exclude(s0 + k, "codon_spans_excluded");
      continue;
    }
    if (n_poly >= 2) {
      for (int k = 0; k < 3; ++k) exclude(s0 + k, "codon_multiple_polymorphisms");
      continue;
    }

    char maj[2][4] = {{0, 0, 0, 0}, {0, 0, 0, 0}};  // majority codon per species
    for (int sp = 0; sp < 2; ++sp)
      for (int k = 0; k < 3; ++k)
        maj[sp][k] = kBases[majority(t.cols[s0 + k], sp)];

    for (int k = 0; k < 3; ++k) {
      SiteClass& sc = out.sites[s0 + k];
      if (sc.variation == Variation::Monomorphic ||
          sc.variation == Variation::Excluded)
        continue;
      if (sc.variation == Variation::FixedDifference) {
        sc.coding = translate_codon(maj[0]) == translate_codon(maj[1])
                        ? Coding::Silent
                        : Coding::Replacement;
        continue;
      }
      // polymorphic: compare the two alleles in each segregating species
      auto call_in = [&](int sp) {
        const auto& cnt = t.cols[s0 + k][sp].base;
        char a1 = 0, a2 = 0;
        for (int b = 0; b < 4; ++b) {
          if (cnt[b] == 0) continue;
          (a1 == 0 ? a1 : a2) = kBases[b];
        }
        char codon[4];
        std::copy(maj[sp], maj[sp] + 3, codon);
        codon[3] = 0;
        codon[k] = a1;
        const char aa1 = translate_codon(codon);
        codon[k] = a2;
        const char aa2 = translate_codon(codon);
        return aa1 == aa2 ? Coding::Silent : Coding::Replacement;
      };
      if (sc.variation == Variation::PolymorphicOne) {
        const int sp = t.cols[s0 + k][0].distinct() == 2 ? 0 : 1;
        sc.coding = call_in(sp);
      } else {
        const Coding c1 = call_in(0), c2 = call_in(1);
        if (c1 == c2) {
          sc.coding = c1;
        } else {
          sc.coding = Coding::Excluded;
          sc.reason = "ambiguous_coding";
          ++out.exclusion_census["ambiguous_coding"];
        }
      }
    }
  }

  out.validate();
  return out;
}

TablePair count_tables(const SiteClassification& c,
                       bool dprs_double_count_shared) {
  CountTable tab;
  tab.layout = TableLayout::DOHRS;
  tab.m = c.m;
  tab.n = c.n;
  for (const auto& s : c.sites) {
    if (s.coding != Coding::Silent && s.coding != Coding::Replacement) continue;
    const bool silent = s.coding == Coding::Silent;
    switch (s.variation) {
      case Variation::FixedDifference: (silent ? tab.K_s : tab.K_r) += 1; break;
      case Variation::PolymorphicOne: (silent ? tab.O_s : tab.O_r) += 1; break;
      case Variation::PolymorphicBoth: (silent ? tab.H_s : tab.H_r) += 1; break;
      default: break;
    }
  }
  return {tab, tab.to_dprs(dprs_double_count_shared)};
}

}  // namespace prf::align
