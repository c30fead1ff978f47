// SPDX-License-Identifier: Apache-2.0

#include "vnsgru/data.hpp"

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "vnsgru/errors.hpp"

namespace vnsgru {

namespace {

using ojson = nlohmann::ordered_json;

const char* const kSpecialTokens[4] = {"<pad>", "<bos>", "<eos>", "<unk>"};

std::string read_text_file(const std::string& path, const char* what) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw FormatError(std::string(what) + " '" + path + "': cannot open");
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& bytes, const char* what) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw FormatError(std::string(what) + " '" + path + "': cannot open for writing");
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  f.flush();
  if (!f) throw FormatError(std::string(what) + " '" + path + "': write failed");
}

float load_f32_le(const unsigned char* p) {
  std::uint32_t u = static_cast<std::uint32_t>(p[0]) |
                    static_cast<std::uint32_t>(p[1]) << 8 |
                    static_cast<std::uint32_t>(p[2]) << 16 |
                    static_cast<std::uint32_t>(p[3]) << 24;
  float v;
  std::memcpy(&v, &u, 4);
  return v;
}

void store_f32_le(float v, std::string& out) {
  std::uint32_t u;
  std::memcpy(&u, &v, 4);
  out.push_back(static_cast<char>(u & 0xff));
  out.push_back(static_cast<char>((u >> 8) & 0xff));
  out.push_back(static_cast<char>((u >> 16) & 0xff));
  out.push_back(static_cast<char>((u >> 24) & 0xff));
}

const ojson& need(const ojson& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw FormatError(std::string("manifest: missing key '") + key + "'");
  return *it;
}

std::string need_string(const ojson& j, const char* key) {
  const ojson& v = need(j, key);
  if (!v.is_string()) throw FormatError(std::string("manifest: '") + key + "' must be a string");
  return v.get<std::string>();
}

std::size_t need_dim(const ojson& j, const char* key) {
  const ojson& v = need(j, key);
  if (!v.is_number_integer() || v.get<long long>() < 1)
    throw FormatError(std::string("manifest: '") + key + "' must be a positive integer");
  return static_cast<std::size_t>(v.get<long long>());
}

std::vector<std::string> need_string_array(const ojson& j, const char* key) {
  const ojson& v = need(j, key);
  if (!v.is_array()) throw FormatError(std::string("manifest: '") + key + "' must be an array");
  std::vector<std::string> out;
  out.reserve(v.size());
  for (const ojson& e : v) {
    if (!e.is_string())
      throw FormatError(std::string("manifest: '") + key + "' entries must be strings");
    out.push_back(e.get<std::string>());
  }
  return out;
}

void check_in_unit_interval(const VideoRecord& rec, const char* field,
                            const Tensor& t) {
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double x = t(i);
    if (!(x >= 0.0 && x <= 1.0)) {
      std::ostringstream msg;
      msg << "record '" << rec.id << "': " << field << "[" << i << "] = " << x
          << " outside [0, 1]";
      throw DomainError(msg.str());
    }
  }
}

// ---- synthetic caption themes -------------------------------------------

struct ThemePhrases {
  const char* subjects[3];
  const char* verbs[3];
  const char* objects[3];
  const char* tails[2];
};

constexpr ThemePhrases kThemes[] = {
    {{"a dog", "the dog", "a puppy"},
     {"is chasing", "chases", "is following"},
     {"a ball", "the ball", "a red ball"},
     {"in the park", "outside"}},
    {{"a man", "the man", "a chef"},
     {"is cooking", "cooks", "is preparing"},
     {"dinner", "a meal", "some food"},
     {"in the kitchen", "at home"}},
    {{"a woman", "the woman", "a girl"},
     {"is riding", "rides", "is pedaling"},
     {"a bike", "a bicycle", "her bike"},
     {"down the road", "on the street"}},
    {{"a cat", "the cat", "a kitten"},
     {"is sleeping", "sleeps", "is resting"},
     {"on the couch", "on a chair", "on the bed"},
     {"quietly", "peacefully"}},
    {{"a boy", "the boy", "a kid"},
     {"is playing", "plays", "is strumming"},
     {"the guitar", "a guitar", "his guitar"},
     {"on stage", "in his room"}},
    {{"a bird", "the bird", "a small bird"},
     {"is flying", "flies", "is soaring"},
     {"over the lake", "above the trees", "in the sky"},
     {"at sunset", "slowly"}},
    {{"a horse", "the horse", "a pony"},
     {"is running", "runs", "is galloping"},
     {"across the field", "through the grass", "along the beach"},
     {"quickly", "in the rain"}},
    {{"a singer", "the singer", "a young man"},
     {"is singing", "sings", "is performing"},
     {"a song", "a tune", "an old song"},
     {"loudly", "with a band"}},
    {{"a swimmer", "the swimmer", "a child"},
     {"is swimming", "swims", "is splashing"},
     {"in the pool", "in a lake", "in the sea"},
     {"with friends", "happily"}},
    {{"a train", "the train", "a red train"},
     {"is moving", "moves", "is speeding"},
     {"along the tracks", "past the station", "through the tunnel"},
     {"at night", "fast"}},
    {{"a monkey", "the monkey", "a chimp"},
     {"is climbing", "climbs", "is swinging"},
     {"a tree", "up a tree", "on the ropes"},
     {"in the jungle", "playfully"}},
    {{"a farmer", "the farmer", "an old man"},
     {"is planting", "plants", "is watering"},
     {"vegetables", "the crops", "some flowers"},
     {"in the garden", "before noon"}},
};

constexpr std::size_t kThemeCount = sizeof(kThemes) / sizeof(kThemes[0]);

// Variant index biased toward the canonical phrasing.
std::size_t pick_variant(Rng& rng) {
  return rng.bernoulli(0.5) ? 0 : rng.uniform_index(3);
}

Tensor indicator_features(std::size_t dim, std::size_t theme, std::size_t themes,
                          double noise, Rng& rng) {
  const std::size_t block = dim / themes;
  Tensor t = Tensor::zeros({dim});
  for (std::size_t j = 0; j < dim; ++j) {
    const bool in_block = j >= theme * block && j < (theme + 1) * block;
    const double ind = in_block ? 1.0 : 0.0;
    t(j) = (1.0 - noise) * ind + noise * rng.uniform();
  }
  round_to_storage_precision(t);
  return t;
}

} // namespace

// ---- Vocabulary ----------------------------------------------------------

Vocabulary::Vocabulary() {
  for (int i = 0; i < 4; ++i) add(kSpecialTokens[i], 0);
}

int Vocabulary::id_of(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnk : it->second;
}

bool Vocabulary::contains(const std::string& token) const {
  return index_.count(token) != 0;
}

const std::string& Vocabulary::token_of(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size())
    throw DomainError("vocabulary: id " + std::to_string(id) + " out of range, size " +
                      std::to_string(tokens_.size()));
  return tokens_[static_cast<std::size_t>(id)];
}

long Vocabulary::count_of(int id) const {
  token_of(id); // range check
  return counts_[static_cast<std::size_t>(id)];
}

int Vocabulary::add(const std::string& token, long count) {
  if (index_.count(token))
    throw DomainError("vocabulary: duplicate token '" + token + "'");
  const int id = static_cast<int>(tokens_.size());
  tokens_.push_back(token);
  counts_.push_back(count);
  index_.emplace(token, id);
  return id;
}

Vocabulary build_vocabulary(const std::vector<std::string>& corpus,
                            std::size_t min_count) {
  if (corpus.empty()) throw DomainError("build_vocabulary: empty corpus");
  std::map<std::string, long> counts;
  for (const std::string& sentence : corpus)
    for (const std::string& tok : tokenize(sentence)) ++counts[tok];

  std::vector<std::pair<std::string, long>> kept;
  for (const auto& [tok, cnt] : counts)
    if (cnt >= static_cast<long>(min_count)) kept.emplace_back(tok, cnt);
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  Vocabulary vocab;
  for (const auto& [tok, cnt] : kept) vocab.add(tok, cnt);
  return vocab;
}

std::vector<int> encode_caption(const Vocabulary& vocab, const std::string& caption) {
  std::vector<int> ids;
  for (const std::string& tok : tokenize(caption)) ids.push_back(vocab.id_of(tok));
  ids.push_back(Vocabulary::kEos);
  return ids;
}

std::string decode_tokens(const Vocabulary& vocab, const std::vector<int>& ids) {
  std::string out;
  for (int id : ids) {
    if (id >= 0 && id < 4) continue;
    if (!out.empty()) out.push_back(' ');
    out += vocab.token_of(id);
  }
  return out;
}

// ---- Dataset -------------------------------------------------------------

const VideoRecord& Dataset::by_id(const std::string& id) const {
  for (const VideoRecord& r : records)
    if (r.id == id) return r;
  throw DomainError("dataset: no record with id '" + id + "'");
}

std::vector<const VideoRecord*> Dataset::split(const std::string& split_name) const {
  const std::vector<std::string>* ids = nullptr;
  if (split_name == "train") ids = &splits.train;
  else if (split_name == "validation") ids = &splits.validation;
  else if (split_name == "test") ids = &splits.test;
  else throw ConfigError("dataset: unknown split '" + split_name + "'");
  std::vector<const VideoRecord*> out;
  out.reserve(ids->size());
  for (const std::string& id : *ids) out.push_back(&by_id(id));
  return out;
}

Dataset load_dataset(const std::string& manifest_path,
                     const std::string& features_path) {
  ojson doc;
  try {
    doc = ojson::parse(read_text_file(manifest_path, "manifest"));
  } catch (const ojson::exception& e) {
    throw FormatError("manifest '" + manifest_path + "': " + e.what());
  }
  if (!doc.is_object()) throw FormatError("manifest: top level must be an object");

  Dataset ds;
  ds.name = need_string(doc, "name");
  ds.n_v = need_dim(doc, "n_v");
  ds.n_s = need_dim(doc, "n_s");
  ds.features_file = need_string(doc, "features");

  const ojson& splits = need(doc, "splits");
  if (!splits.is_object()) throw FormatError("manifest: 'splits' must be an object");
  ds.splits.train = need_string_array(splits, "train");
  ds.splits.validation = need_string_array(splits, "validation");
  ds.splits.test = need_string_array(splits, "test");

  const ojson& records = need(doc, "records");
  if (!records.is_array()) throw FormatError("manifest: 'records' must be an array");
  std::set<std::string> seen;
  for (const ojson& r : records) {
    if (!r.is_object()) throw FormatError("manifest: record entries must be objects");
    VideoRecord rec;
    rec.id = need_string(r, "id");
    rec.captions = need_string_array(r, "captions");
    if (rec.captions.empty())
      throw DomainError("record '" + rec.id + "' has no captions");
    if (!seen.insert(rec.id).second)
      throw DomainError("manifest: duplicate record id '" + rec.id + "'");
    ds.records.push_back(std::move(rec));
  }

  std::set<std::string> in_split;
  auto check_split = [&](const char* name, const std::vector<std::string>& ids) {
    for (const std::string& id : ids) {
      if (!seen.count(id))
        throw DomainError(std::string("split '") + name + "' references unknown id '" +
                          id + "'");
      if (!in_split.insert(id).second)
        throw DomainError("id '" + id + "' appears in more than one split");
    }
  };
  check_split("train", ds.splits.train);
  check_split("validation", ds.splits.validation);
  check_split("test", ds.splits.test);

  const std::string blob = read_text_file(features_path, "feature file");
  const std::size_t per_record = (ds.n_v + ds.n_s) * 4;
  const std::size_t expected = ds.records.size() * per_record;
  if (blob.size() != expected) {
    std::ostringstream msg;
    msg << "feature file '" << features_path << "': expected " << expected
        << " bytes for " << ds.records.size() << " records of " << ds.n_v << "+"
        << ds.n_s << " values, got " << blob.size() << " bytes";
    throw FormatError(msg.str());
  }

  const unsigned char* p = reinterpret_cast<const unsigned char*>(blob.data());
  for (VideoRecord& rec : ds.records) {
    rec.v = Tensor::zeros({ds.n_v});
    for (std::size_t j = 0; j < ds.n_v; ++j, p += 4) rec.v(j) = load_f32_le(p);
    rec.s = Tensor::zeros({ds.n_s});
    for (std::size_t j = 0; j < ds.n_s; ++j, p += 4) rec.s(j) = load_f32_le(p);
    check_in_unit_interval(rec, "v", rec.v);
    check_in_unit_interval(rec, "s", rec.s);
  }
  return ds;
}

void write_dataset(const Dataset& ds, const std::string& manifest_path,
                   const std::string& features_path) {
  ojson doc;
  doc["name"] = ds.name;
  doc["n_v"] = ds.n_v;
  doc["n_s"] = ds.n_s;
  doc["features"] = std::filesystem::path(features_path).filename().string();
  doc["splits"] = {{"train", ds.splits.train},
                   {"validation", ds.splits.validation},
                   {"test", ds.splits.test}};
  ojson records = ojson::array();
  for (const VideoRecord& rec : ds.records) {
    ojson r;
    r["id"] = rec.id;
    r["captions"] = rec.captions;
    records.push_back(std::move(r));
  }
  doc["records"] = std::move(records);
  write_file(manifest_path, doc.dump(2) + "\n", "manifest");

  std::string blob;
  blob.reserve(ds.records.size() * (ds.n_v + ds.n_s) * 4);
  for (const VideoRecord& rec : ds.records) {
    if (rec.v.size() != ds.n_v || rec.s.size() != ds.n_s)
      throw ConfigError("record '" + rec.id + "': feature sizes disagree with manifest dims");
    for (std::size_t j = 0; j < ds.n_v; ++j)
      store_f32_le(static_cast<float>(rec.v(j)), blob);
    for (std::size_t j = 0; j < ds.n_s; ++j)
      store_f32_le(static_cast<float>(rec.s(j)), blob);
  }
  write_file(features_path, blob, "feature file");
}

void encode_dataset(Dataset& ds, const Vocabulary& vocab) {
  for (VideoRecord& rec : ds.records) {
    rec.annotations.clear();
    rec.annotations.reserve(rec.captions.size());
    for (const std::string& caption : rec.captions)
      rec.annotations.push_back(encode_caption(vocab, caption));
  }
}

std::vector<std::string> split_captions(const Dataset& ds,
                                        const std::string& split_name) {
  std::vector<std::string> out;
  for (const VideoRecord* rec : ds.split(split_name))
    for (const std::string& caption : rec->captions) out.push_back(caption);
  return out;
}

// ---- synthetic generation ------------------------------------------------

Dataset generate_synthetic_dataset(const SyntheticSpec& spec, std::uint64_t seed) {
  if (spec.videos < 1) throw ConfigError("synthetic: videos must be at least 1");
  if (spec.themes < 2) throw ConfigError("synthetic: at least 2 themes required");
  if (spec.themes > kThemeCount)
    throw ConfigError("synthetic: at most " + std::to_string(kThemeCount) +
                      " themes available");
  if (spec.annotations_per_video < 1)
    throw ConfigError("synthetic: annotations_per_video must be at least 1");
  if (!(spec.noise >= 0.0 && spec.noise <= 1.0))
    throw ConfigError("synthetic: noise must lie in [0, 1]");
  if (spec.n_v < spec.themes || spec.n_s < spec.themes)
    throw ConfigError("synthetic: feature dims must be >= themes so each theme gets a block");

  Rng rng(seed);
  Dataset ds;
  ds.name = spec.name;
  ds.n_v = spec.n_v;
  ds.n_s = spec.n_s;
  ds.features_file = "features.bin";

  for (std::size_t i = 0; i < spec.videos; ++i) {
    VideoRecord rec;
    std::ostringstream id;
    id << "vid" << std::setw(4) << std::setfill('0') << i;
    rec.id = id.str();

    const std::size_t theme = rng.uniform_index(spec.themes);
    rec.v = indicator_features(spec.n_v, theme, spec.themes, spec.noise, rng);
    rec.s = indicator_features(spec.n_s, theme, spec.themes, spec.noise, rng);

    const ThemePhrases& ph = kThemes[theme];
    auto canonical = std::string(ph.subjects[0]) + " " + ph.verbs[0] + " " + ph.objects[0];
    rec.captions.push_back(canonical);
    for (std::size_t a = 1; a < spec.annotations_per_video; ++a) {
      std::string cap = std::string(ph.subjects[pick_variant(rng)]) + " " +
                        ph.verbs[pick_variant(rng)] + " " + ph.objects[pick_variant(rng)];
      if (rng.bernoulli(0.3)) cap += std::string(" ") + ph.tails[rng.uniform_index(2)];
      rec.captions.push_back(std::move(cap));
    }
    ds.records.push_back(std::move(rec));
  }

  const std::size_t held = spec.videos / 6;
  const std::size_t n_train = spec.videos - 2 * held;
  for (std::size_t i = 0; i < spec.videos; ++i) {
    const std::string& id = ds.records[i].id;
    if (i < n_train) ds.splits.train.push_back(id);
    else if (i < n_train + held) ds.splits.validation.push_back(id);
    else ds.splits.test.push_back(id);
  }
  return ds;
}

// ---- sampling and statistics ---------------------------------------------

std::vector<std::size_t> sample_annotation_indices(std::size_t available,
                                                   std::size_t n, Rng& rng) {
  if (available == 0) throw DomainError("sample_annotations: record has no annotations");
  std::vector<std::size_t> perm(available);
  for (std::size_t i = 0; i < available; ++i) perm[i] = i;
  rng.shuffle(perm);

  std::vector<std::size_t> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n && i < available; ++i) out.push_back(perm[i]);
  while (out.size() < n) out.push_back(rng.uniform_index(available));
  return out;
}

std::vector<std::vector<int>> sample_annotations(const VideoRecord& record,
                                                 std::size_t n, Rng& rng) {
  std::vector<std::vector<int>> out;
  out.reserve(n);
  for (std::size_t idx : sample_annotation_indices(record.annotations.size(), n, rng))
    out.push_back(record.annotations[idx]);
  return out;
}

DistinctStats distinct_stats(const std::vector<Tokens>& captions) {
  std::set<Tokens> sentences;
  std::set<std::string> words;
  for (const Tokens& cap : captions) {
    sentences.insert(cap);
    for (const std::string& tok : cap) words.insert(tok);
  }
  return DistinctStats{sentences.size(), words.size()};
}

// ---- caption files -------------------------------------------------------

void write_caption_file(const std::string& path,
                        const std::vector<std::pair<std::string, std::string>>& rows) {
  std::string out;
  for (const auto& [id, caption] : rows) {
    out += id;
    out.push_back('\t');
    out += caption;
    out.push_back('\n');
  }
  write_file(path, out, "caption file");
}

std::vector<std::pair<std::string, std::string>> read_caption_file(
    const std::string& path) {
  const std::string text = read_text_file(path, "caption file");
  std::vector<std::pair<std::string, std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos)
      throw FormatError("caption file '" + path + "': line without tab separator");
    rows.emplace_back(line.substr(0, tab), line.substr(tab + 1));
  }
  return rows;
}

void write_vocabulary(const Vocabulary& vocab, const std::string& path) {
  std::string out;
  for (std::size_t id = 0; id < vocab.size(); ++id) {
    out += vocab.token_of(static_cast<int>(id));
    out.push_back('\t');
    out += std::to_string(vocab.count_of(static_cast<int>(id)));
    out.push_back('\n');
  }
  write_file(path, out, "vocabulary file");
}

Vocabulary read_vocabulary(const std::string& path) {
  const std::string text = read_text_file(path, "vocabulary file");
  Vocabulary vocab;
  std::istringstream in(text);
  std::string line;
  std::size_t id = 0;
  while (std::getline(in, line)) {
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos)
      throw FormatError("vocabulary file '" + path + "': line without tab separator");
    const std::string token = line.substr(0, tab);
    long count = 0;
    try {
      count = std::stol(line.substr(tab + 1));
    } catch (const std::exception&) {
      throw FormatError("vocabulary file '" + path + "': bad count for '" + token + "'");
    }
    if (id < 4) {
      if (token != kSpecialTokens[id])
        throw FormatError("vocabulary file '" + path + "': line " + std::to_string(id) +
                          " must be the reserved token '" + kSpecialTokens[id] + "'");
    } else {
      vocab.add(token, count);
    }
    ++id;
  }
  if (id < 4)
    throw FormatError("vocabulary file '" + path + "': missing reserved tokens");
  return vocab;
}

} // namespace vnsgru
