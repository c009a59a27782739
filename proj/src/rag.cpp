#include "cliniq/rag.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "cliniq/error.hpp"
#include "cliniq/ioutil.hpp"
#include "cliniq/simd.hpp"
#include "cliniq/text.hpp"
#include "json.hpp"

namespace cliniq::rag {

using nlohmann::json;

std::vector<Chunk> chunk_document(const std::string& doc, const std::string& doc_id,
                                  const ChunkingConfig& cfg) {
  if (cfg.chunk_size == 0 || cfg.overlap >= cfg.chunk_size) {
    throw Error(errc::config_error,
                "chunking requires 0 <= overlap < chunk_size (got size " +
                    std::to_string(cfg.chunk_size) + ", overlap " +
                    std::to_string(cfg.overlap) + ")");
  }
  std::vector<std::string> tokens = tokenize(doc);
  std::vector<Chunk> chunks;
  const size_t n = tokens.size();
  if (n == 0) return chunks;
  const size_t stride = cfg.chunk_size - cfg.overlap;
  for (size_t start = 0;; start += stride) {
    Chunk c;
    c.chunk_id = chunks.size();
    c.doc_id = doc_id;
    c.token_start = start;
    c.token_end = std::min(start + cfg.chunk_size, n);
    c.text = join_tokens(tokens, c.token_start, c.token_end);
    chunks.push_back(std::move(c));
    if (chunks.back().token_end == n) break;
  }
  return chunks;
}

std::string HashEmbedder::id() const {
  return "hash-bag-" + std::to_string(dimension_);
}

std::vector<float> HashEmbedder::embed(const std::string& text) const {
  std::vector<double> acc(dimension_, 0.0);
  for (const std::string& token : tokenize(text)) {
    uint64_t h = fnv1a64(to_lower(token));
    size_t bucket = static_cast<size_t>(h % dimension_);
    acc[bucket] += (h >> 63) ? -1.0 : 1.0;
  }
  double norm2 = 0.0;
  for (double x : acc) norm2 += x * x;
  std::vector<float> v(dimension_, 0.0f);
  if (norm2 == 0.0) {
    v[0] = 1.0f;  // canonical vector for token-free or fully cancelled text
    return v;
  }
  double inv = 1.0 / std::sqrt(norm2);
  for (size_t i = 0; i < dimension_; ++i) {
    v[i] = static_cast<float>(acc[i] * inv);
  }
  return v;
}

RemoteEmbedder::RemoteEmbedder(gw::EndpointConfig endpoint, std::string model_id,
                               size_t dimension)
    : endpoint_(std::move(endpoint)), model_id_(std::move(model_id)),
      dimension_(dimension) {}

std::string RemoteEmbedder::id() const {
  return "remote-" + model_id_ + "-" + std::to_string(dimension_);
}

std::vector<float> RemoteEmbedder::embed(const std::string& text) const {
  // Reuses the chat transport for one-shot embedding calls: the endpoint is
  // expected to reply with a JSON array of dimension() floats as content.
  gw::Gateway gateway;
  gw::ChatRequest request;
  request.model_id = model_id_;
  request.messages = {{"user", text}};
  gw::ChatResponse response = gateway.complete(endpoint_, request);
  json parsed = json::parse(response.content, nullptr, false);
  if (parsed.is_discarded() || !parsed.is_array() || parsed.size() != dimension_) {
    throw Error(errc::gw_protocol, "embedding endpoint " + endpoint_.id +
                                       " did not return " + std::to_string(dimension_) +
                                       " floats");
  }
  std::vector<double> raw;
  raw.reserve(dimension_);
  double norm2 = 0.0;
  for (const auto& x : parsed) {
    if (!x.is_number()) {
      throw Error(errc::gw_protocol,
                  "embedding endpoint " + endpoint_.id + " returned a non-number");
    }
    double d = x.get<double>();
    raw.push_back(d);
    norm2 += d * d;
  }
  std::vector<float> v(dimension_, 0.0f);
  if (norm2 == 0.0) {
    v[0] = 1.0f;
    return v;
  }
  double inv = 1.0 / std::sqrt(norm2);
  for (size_t i = 0; i < dimension_; ++i) {
    v[i] = static_cast<float>(raw[i] * inv);
  }
  return v;
}

VectorIndex VectorIndex::build(std::vector<EmbeddingRecord> records, size_t dimension,
                               const std::string& embedder_id) {
  std::set<size_t> seen;
  for (const EmbeddingRecord& r : records) {
    if (r.vector.size() != dimension) {
      throw Error(errc::data_error,
                  "embedding for chunk " + std::to_string(r.chunk_id) + " has dimension " +
                      std::to_string(r.vector.size()) + ", index expects " +
                      std::to_string(dimension));
    }
    if (!seen.insert(r.chunk_id).second) {
      throw Error(errc::data_error,
                  "duplicate chunk_id " + std::to_string(r.chunk_id) + " in index build");
    }
  }
  VectorIndex index;
  index.records_ = std::move(records);
  index.dimension_ = dimension;
  index.embedder_id_ = embedder_id;
  return index;
}

std::vector<Hit> VectorIndex::search(const std::vector<float>& query, size_t k) const {
  if (query.size() != dimension_) {
    throw Error(errc::data_error, "query dimension " + std::to_string(query.size()) +
                                      " does not match index dimension " +
                                      std::to_string(dimension_));
  }
  std::vector<Hit> hits;
  hits.reserve(records_.size());
  for (const EmbeddingRecord& r : records_) {
    hits.push_back({r.chunk_id, simd::dot(query, r.vector)});
  }
  std::sort(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.chunk_id < b.chunk_id;
  });
  if (hits.size() > k) hits.resize(k);
  return hits;
}

void VectorIndex::save(const std::string& path) const {
  std::string out;
  json header = {{"dimension", dimension_},
                 {"embedder_id", embedder_id_},
                 {"count", records_.size()}};
  out += header.dump();
  out += '\n';
  for (const EmbeddingRecord& r : records_) {
    json rec = {{"chunk_id", r.chunk_id}, {"vector", r.vector}};
    out += rec.dump();
    out += '\n';
  }
  write_file_atomic(path, out);
}

VectorIndex VectorIndex::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(errc::io_error, "cannot open index file " + path);
  std::string line;
  if (!std::getline(in, line)) {
    throw Error(errc::data_error, "index file " + path + " is empty");
  }
  json header = json::parse(line, nullptr, false);
  if (header.is_discarded() || !header.contains("dimension") ||
      !header.contains("embedder_id") || !header.contains("count")) {
    throw Error(errc::data_error, "index file " + path + ": malformed header");
  }
  size_t dimension = header["dimension"].get<size_t>();
  size_t count = header["count"].get<size_t>();
  std::vector<EmbeddingRecord> records;
  records.reserve(count);
  size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json rec = json::parse(line, nullptr, false);
    if (rec.is_discarded() || !rec.contains("chunk_id") || !rec.contains("vector")) {
      throw Error(errc::data_error,
                  "index file " + path + " line " + std::to_string(line_no) + ": malformed");
    }
    EmbeddingRecord r;
    r.chunk_id = rec["chunk_id"].get<size_t>();
    r.vector = rec["vector"].get<std::vector<float>>();
    records.push_back(std::move(r));
  }
  if (records.size() != count) {
    throw Error(errc::data_error, "index file " + path + ": header count " +
                                      std::to_string(count) + " but " +
                                      std::to_string(records.size()) + " records");
  }
  return build(std::move(records), dimension, header["embedder_id"].get<std::string>());
}

std::vector<EmbeddingRecord> embed_chunks(const std::vector<Chunk>& chunks,
                                          const Embedder& embedder) {
  std::vector<EmbeddingRecord> records;
  records.reserve(chunks.size());
  for (const Chunk& c : chunks) {
    records.push_back({c.chunk_id, embedder.embed(c.text)});
  }
  return records;
}

void save_chunks(const std::vector<Chunk>& chunks, const std::string& path) {
  std::string out;
  for (const Chunk& c : chunks) {
    json rec = {{"chunk_id", c.chunk_id},
                {"doc_id", c.doc_id},
                {"token_start", c.token_start},
                {"token_end", c.token_end},
                {"text", c.text}};
    out += rec.dump();
    out += '\n';
  }
  write_file_atomic(path, out);
}

std::vector<Chunk> load_chunks(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(errc::io_error, "cannot open chunk file " + path);
  std::vector<Chunk> chunks;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json rec = json::parse(line, nullptr, false);
    if (rec.is_discarded() || !rec.contains("chunk_id") || !rec.contains("text")) {
      throw Error(errc::data_error,
                  "chunk file " + path + " line " + std::to_string(line_no) + ": malformed");
    }
    Chunk c;
    c.chunk_id = rec["chunk_id"].get<size_t>();
    c.doc_id = rec.value("doc_id", std::string{});
    c.token_start = rec.value("token_start", size_t{0});
    c.token_end = rec.value("token_end", size_t{0});
    c.text = rec["text"].get<std::string>();
    chunks.push_back(std::move(c));
  }
  return chunks;
}

RagAnswer answer_unstructured_question(const std::string& question,
                                       const VectorIndex& index,
                                       const std::vector<Chunk>& chunks,
                                       const Embedder& embedder, gw::Gateway& gateway,
                                       const gw::EndpointConfig& endpoint,
                                       const RetrievalConfig& cfg,
                                       const std::string& model_id) {
  if (cfg.k == 0) {
    throw Error(errc::config_error, "retrieval depth k must be >= 1");
  }
  if (embedder.id() != index.embedder_id()) {
    throw Error(errc::data_error, "index was built with embedder \"" +
                                      index.embedder_id() + "\" but query uses \"" +
                                      embedder.id() + "\" — one shared space is required");
  }
  RagAnswer out;
  out.question = question;
  out.retrieved = index.search(embedder.embed(question), cfg.k);
  out.empty_context = out.retrieved.empty();

  // Context keeps document order, not score order — sort the hit ids.
  std::vector<size_t> ids;
  for (const Hit& h : out.retrieved) ids.push_back(h.chunk_id);
  std::sort(ids.begin(), ids.end());
  for (size_t id : ids) {
    auto it = std::find_if(chunks.begin(), chunks.end(),
                           [&](const Chunk& c) { return c.chunk_id == id; });
    if (it == chunks.end()) {
      throw Error(errc::data_error,
                  "retrieved chunk " + std::to_string(id) + " missing from chunk store");
    }
    if (!out.context.empty()) out.context += "\n\n";
    out.context += it->text;
  }

  gw::ChatRequest request;
  request.model_id = model_id;
  request.messages = {
      {"system",
       "You answer questions about a clinical note. Use only the provided context; "
       "if the context does not contain the answer, say so."},
      {"user", "Context:\n" + (out.context.empty() ? std::string("(no context)")
                                                   : out.context) +
                   "\n\nQuestion: " + question +
                   "\n\nAnswer using only the context above."}};
  out.answer = gateway.complete(endpoint, request).content;
  return out;
}

}  // namespace cliniq::rag
