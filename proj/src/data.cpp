// Apache License, Version 2.0, refer to LICENSE.txt

#include "cvb/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "cvb/rng.hpp"

namespace cvb {

namespace fs = std::filesystem;

namespace {

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "' for reading");
  return in;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  return out;
}

[[noreturn]] void fail(const fs::path& path, std::size_t line, const std::string& what) {
  throw ParseError(path.string() + ":" + std::to_string(line) + ": " + what);
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
bool parse_number(std::string_view text, T& out) {
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

std::vector<std::string> split_ws(const std::string& line) {
  std::istringstream ss(line);
  std::vector<std::string> out;
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::vector<Eigen::Vector2d> mog_centers(double R) {
  return {Eigen::Vector2d(0.0, 0.0), Eigen::Vector2d(R, R), Eigen::Vector2d(R, -R),
          Eigen::Vector2d(-R, R), Eigen::Vector2d(-R, -R)};
}

MogData generate_mog(const MogGenSpec& spec) {
  if (!(spec.R > 0.0)) throw std::invalid_argument("generate_mog: R must be positive");
  if (spec.n_per_cluster < 1) {
    throw std::invalid_argument("generate_mog: n_per_cluster must be at least 1");
  }
  Rng rng(spec.seed);
  const auto centers = mog_centers(spec.R);
  MogData data;
  data.Y.resize(static_cast<Eigen::Index>(centers.size() * spec.n_per_cluster), 2);
  Eigen::Index row = 0;
  for (const auto& c : centers) {
    for (std::size_t i = 0; i < spec.n_per_cluster; ++i, ++row) {
      data.Y(row, 0) = c(0) + rng.normal();
      data.Y(row, 1) = c(1) + rng.normal();
    }
  }
  return data;
}

GeneratedCorpus generate_corpus(std::size_t K, std::size_t num_docs,
                                std::size_t vocab_size, std::size_t doc_len,
                                double alpha, double beta, std::uint64_t seed) {
  if (K == 0 || num_docs == 0 || vocab_size == 0 || doc_len == 0) {
    throw std::invalid_argument("generate_corpus: sizes must be positive");
  }
  Rng rng(seed);
  GeneratedCorpus out;
  out.true_phi.resize(static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(vocab_size));
  out.true_theta.resize(static_cast<Eigen::Index>(num_docs), static_cast<Eigen::Index>(K));
  const std::vector<double> beta_vec(vocab_size, beta);
  const std::vector<double> alpha_vec(K, alpha);
  std::vector<std::vector<double>> phi(K);
  for (std::size_t k = 0; k < K; ++k) {
    phi[k] = rng.dirichlet(beta_vec);
    for (std::size_t v = 0; v < vocab_size; ++v) {
      out.true_phi(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(v)) = phi[k][v];
    }
  }

  out.corpus.num_docs = num_docs;
  out.corpus.vocab_size = vocab_size;
  for (std::size_t d = 0; d < num_docs; ++d) {
    const auto theta = rng.dirichlet(alpha_vec);
    for (std::size_t k = 0; k < K; ++k) {
      out.true_theta(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(k)) = theta[k];
    }
    std::map<std::size_t, std::uint32_t> counts;
    for (std::size_t n = 0; n < doc_len; ++n) {
      const auto topic = rng.categorical(theta);
      const auto word = rng.categorical(phi[topic]);
      ++counts[word];
    }
    for (const auto& [word, count] : counts) {
      out.corpus.cells.push_back({d, word, count});
    }
  }
  return out;
}

GeneratedAlignments generate_alignments(std::size_t num_transcripts,
                                        std::size_t num_reads,
                                        std::size_t ambiguity,
                                        double noise_sigma, std::uint64_t seed) {
  if (num_transcripts == 0 || ambiguity < 1 || ambiguity > num_transcripts) {
    throw std::invalid_argument("generate_alignments: ambiguity must lie in [1, M]");
  }
  if (!(noise_sigma > 0.0)) {
    throw std::invalid_argument("generate_alignments: noise_sigma must be positive");
  }
  constexpr double kDecoyShift = 1.0;
  Rng rng(seed);
  GeneratedAlignments out;
  out.true_theta = rng.dirichlet(std::vector<double>(num_transcripts, 1.0));
  out.alignments.num_reads = num_reads;
  out.alignments.num_transcripts = num_transcripts;
  out.true_transcript.resize(num_reads);

  const double inv_var = 1.0 / (noise_sigma * noise_sigma);
  // ln N(x; 0, s^2) - ln N(x; -shift, s^2)
  auto log_ratio = [&](double x) {
    return 0.5 * inv_var * ((x + kDecoyShift) * (x + kDecoyShift) - x * x);
  };

  std::vector<std::size_t> pool(num_transcripts);
  for (std::size_t n = 0; n < num_reads; ++n) {
    const auto source = rng.categorical(out.true_theta);
    out.true_transcript[n] = source;

    // Partial Fisher-Yates over the other transcripts for the decoys.
    std::iota(pool.begin(), pool.end(), 0);
    std::swap(pool[source], pool.back());
    const std::size_t others = num_transcripts - 1;
    std::vector<std::size_t> candidates{source};
    for (std::size_t j = 0; j + 1 < ambiguity; ++j) {
      const auto pick = j + rng.below(others - j);
      std::swap(pool[j], pool[pick]);
      candidates.push_back(pool[j]);
    }
    std::sort(candidates.begin(), candidates.end());
    for (auto m : candidates) {
      const double x = m == source ? rng.normal(0.0, noise_sigma)
                                   : rng.normal(-kDecoyShift, noise_sigma);
      out.alignments.entries.push_back({n, m, log_ratio(x)});
    }
  }
  return out;
}

LogitTable random_init(const RowLayout& layout, std::uint64_t seed, double sigma) {
  Rng rng(seed);
  std::vector<double> rho(layout.size());
  for (auto& v : rho) v = sigma * rng.normal();
  return LogitTable(layout, std::move(rho));
}

// ---------------------------------------------------------------------------

MogData load_points_csv(const fs::path& path) {
  auto in = open_in(path);
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) {
      double v;
      const auto t = trim(field);
      if (!parse_number(t, v) || !std::isfinite(v)) {
        fail(path, line_no, "cannot parse number '" + t + "'");
      }
      row.push_back(v);
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      fail(path, line_no, "expected " + std::to_string(rows.front().size()) +
                              " columns, found " + std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError(path.string() + ": no observations");
  MogData data;
  data.Y.resize(static_cast<Eigen::Index>(rows.size()),
                static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      data.Y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return data;
}

void write_points_csv(const fs::path& path, const MogData& data) {
  auto out = open_out(path);
  for (Eigen::Index i = 0; i < data.Y.rows(); ++i) {
    for (Eigen::Index j = 0; j < data.Y.cols(); ++j) {
      if (j) out << ',';
      out << format_double(data.Y(i, j));
    }
    out << '\n';
  }
}

Corpus load_docword(const fs::path& path, const fs::path& vocab_path) {
  auto in = open_in(path);
  std::string line;
  std::size_t line_no = 0;
  std::size_t header[3];
  const char* names[3] = {"document count", "vocabulary size", "non-zero count"};
  for (int h = 0; h < 3; ++h) {
    if (!std::getline(in, line)) {
      fail(path, line_no + 1, std::string("missing ") + names[h] + " header");
    }
    ++line_no;
    if (!parse_number(trim(line), header[h])) {
      fail(path, line_no, std::string("cannot parse ") + names[h] + " '" + trim(line) + "'");
    }
  }

  Corpus corpus;
  corpus.num_docs = header[0];
  corpus.vocab_size = header[1];
  const std::size_t nnz = header[2];
  corpus.cells.reserve(nnz);
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> seen;
  while (corpus.cells.size() < nnz) {
    if (!std::getline(in, line)) {
      fail(path, line_no + 1, "file ended after " + std::to_string(corpus.cells.size()) +
                                  " of " + std::to_string(nnz) + " entries");
    }
    ++line_no;
    if (trim(line).empty()) continue;
    const auto tok = split_ws(line);
    std::size_t doc, word;
    std::uint32_t count;
    if (tok.size() != 3 || !parse_number(tok[0], doc) || !parse_number(tok[1], word) ||
        !parse_number(tok[2], count)) {
      fail(path, line_no, "expected 'docId wordId count'");
    }
    if (doc < 1 || doc > corpus.num_docs) fail(path, line_no, "document id out of range");
    if (word < 1 || word > corpus.vocab_size) fail(path, line_no, "word id out of range");
    if (count < 1) fail(path, line_no, "count must be positive");
    if (!seen.emplace(std::make_pair(doc, word), line_no).second) {
      fail(path, line_no, "repeated (docId, wordId) pair");
    }
    corpus.cells.push_back({doc - 1, word - 1, count});
  }
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) fail(path, line_no, "more entries than the declared NNZ");
  }

  if (!vocab_path.empty()) {
    auto vin = open_in(vocab_path);
    std::size_t vline = 0;
    while (std::getline(vin, line)) {
      ++vline;
      const auto w = trim(line);
      if (w.empty()) continue;
      corpus.vocab.push_back(w);
    }
    if (corpus.vocab.size() != corpus.vocab_size) {
      throw ParseError(vocab_path.string() + ": expected " +
                       std::to_string(corpus.vocab_size) + " words, found " +
                       std::to_string(corpus.vocab.size()));
    }
  }
  return corpus;
}

void write_docword(const fs::path& path, const Corpus& corpus) {
  auto out = open_out(path);
  out << corpus.num_docs << '\n' << corpus.vocab_size << '\n' << corpus.cells.size() << '\n';
  for (const auto& c : corpus.cells) {
    out << (c.doc + 1) << ' ' << (c.word + 1) << ' ' << c.count << '\n';
  }
}

void write_vocab(const fs::path& path, const Corpus& corpus) {
  auto out = open_out(path);
  for (std::size_t v = 0; v < corpus.vocab_size; ++v) {
    out << (corpus.vocab.empty() ? "w" + std::to_string(v) : corpus.vocab[v]) << '\n';
  }
}

AlignmentMatrix load_alignments(const fs::path& path) {
  auto in = open_in(path);
  std::string line;
  std::size_t line_no = 0;
  AlignmentMatrix a;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = trim(line);
    if (t.empty()) continue;
    if (!have_header) {
      const auto tok = split_ws(t);
      if (tok.size() != 2 || tok[0].rfind("#reads=", 0) != 0 ||
          tok[1].rfind("#transcripts=", 0) != 0 ||
          !parse_number(std::string_view(tok[0]).substr(7), a.num_reads) ||
          !parse_number(std::string_view(tok[1]).substr(13), a.num_transcripts)) {
        fail(path, line_no, "expected header '#reads=N #transcripts=M'");
      }
      have_header = true;
      continue;
    }
    const auto tok = split_ws(t);
    Alignment e;
    if (tok.size() != 3 || !parse_number(tok[0], e.read) ||
        !parse_number(tok[1], e.transcript) || !parse_number(tok[2], e.log_lik)) {
      fail(path, line_no, "expected 'readId transcriptId logLik'");
    }
    if (e.read >= a.num_reads) fail(path, line_no, "read id out of range");
    if (e.transcript >= a.num_transcripts) fail(path, line_no, "transcript id out of range");
    if (!std::isfinite(e.log_lik)) fail(path, line_no, "non-finite log-likelihood");
    a.entries.push_back(e);
  }
  if (!have_header) throw ParseError(path.string() + ": missing header");
  try {
    a.validate();
  } catch (const std::invalid_argument& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return a;
}

void write_alignments(const fs::path& path, const AlignmentMatrix& alignments) {
  auto out = open_out(path);
  out << "#reads=" << alignments.num_reads << " #transcripts=" << alignments.num_transcripts
      << '\n';
  for (const auto& e : alignments.entries) {
    out << e.read << ' ' << e.transcript << ' ' << format_double(e.log_lik) << '\n';
  }
}

}  // namespace cvb
