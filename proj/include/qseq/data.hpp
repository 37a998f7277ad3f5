// Copyright 2026 The qseq Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/**
 * @file data.hpp
 * @brief Text and image ingestion plus featurisation.
 *
 * Text: `label<TAB>text` files, lowercase tokenisation, a vocabulary ranked by
 * training-set frequency with smoothed idf, TF-IDF and rank vectors.
 * Images: IDX (MNIST family) and the 8x8 digits CSV, cut into row, column or
 * block patches.
 */
#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include "qseq/errors.hpp"
#include "qseq/sequence.hpp"

namespace qseq {

struct Dataset {
    std::vector<SequenceSample> samples;
    std::size_t class_count = 2;

    void validate() const {
        if (samples.empty()) throw DataError("dataset is empty");
        for (const auto& s : samples)
            if (s.label < 0 || static_cast<std::size_t>(s.label) >= class_count)
                throw DataError("label " + std::to_string(s.label) + " outside [0, " + std::to_string(class_count) + ")");
    }
};

// ---------------------------------------------------------------------------
// Text

/// Lowercase, split on runs of non-alphanumeric bytes. Bytes >= 0x80 count as
/// word characters so UTF-8 words stay whole.
inline std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    for (unsigned char c : text) {
        if (std::isalnum(c) || c >= 0x80) {
            cur.push_back(static_cast<char>(c >= 0x80 ? c : std::tolower(c)));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

struct TextExample {
    int label = 0;
    std::vector<std::string> tokens;
};

using TextCorpus = std::vector<TextExample>;

inline TextCorpus parse_text_tsv(std::istream& in, const std::string& source = "<stream>") {
    TextCorpus out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        const auto tab = line.find('\t');
        auto fail = [&](const std::string& why) {
            return DataError(source + ":" + std::to_string(lineno) + ": " + why);
        };
        if (tab == std::string::npos) throw fail("expected label<TAB>text");
        const std::string lab = line.substr(0, tab);
        int label = 0;
        std::size_t used = 0;
        try {
            label = std::stoi(lab, &used);
        } catch (const std::exception&) {
            throw fail("label '" + lab + "' is not an integer");
        }
        if (used != lab.size() || label < 0) throw fail("label '" + lab + "' is not a non-negative integer");
        TextExample ex{label, tokenize(std::string_view(line).substr(tab + 1))};
        if (ex.tokens.empty()) throw fail("no tokens after the label");
        out.push_back(std::move(ex));
    }
    if (out.empty()) throw DataError(source + ": no samples");
    return out;
}

inline TextCorpus load_text_tsv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path);
    return parse_text_tsv(in, path);
}

inline std::size_t class_count_of(const TextCorpus& c) {
    int mx = 0;
    for (const auto& e : c) mx = std::max(mx, e.label);
    return static_cast<std::size_t>(mx) + 1;
}

struct VocabEntry {
    std::size_t rank = 0;   // 1 = most frequent
    std::size_t count = 0;  // occurrences in the training corpus
    std::size_t df = 0;     // documents containing the token
    double idf = 1.0;
};

class Vocabulary {
public:
    Vocabulary() = default;

    /// Ranks by descending count, ties alphabetical; idf = ln((1+N)/(1+df)) + 1.
    static Vocabulary fit(const std::vector<std::vector<std::string>>& docs) {
        Vocabulary v;
        v.n_docs_ = docs.size();
        for (const auto& d : docs) {
            std::set<std::string> seen;
            for (const auto& t : d) {
                ++v.entries_[t].count;
                if (seen.insert(t).second) ++v.entries_[t].df;
            }
        }
        std::vector<std::pair<std::string, std::size_t>> order;
        for (const auto& [t, e] : v.entries_) order.emplace_back(t, e.count);
        std::stable_sort(order.begin(), order.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
        v.by_rank_.clear();
        for (std::size_t i = 0; i < order.size(); ++i) {
            auto& e = v.entries_[order[i].first];
            e.rank = i + 1;
            e.idf = std::log((1.0 + static_cast<double>(v.n_docs_)) / (1.0 + static_cast<double>(e.df))) + 1.0;
            v.by_rank_.push_back(order[i].first);
        }
        return v;
    }

    /// Rebuilds a fitted vocabulary from (token, count, df) rows in rank order.
    static Vocabulary restore(std::size_t n_docs,
                              const std::vector<std::tuple<std::string, std::size_t, std::size_t>>& ranked) {
        Vocabulary v;
        v.n_docs_ = n_docs;
        for (const auto& [t, count, df] : ranked) {
            auto& e = v.entries_[t];
            if (e.rank) throw DataError("duplicate vocabulary token '" + t + "'");
            e.rank = v.by_rank_.size() + 1;
            e.count = count;
            e.df = df;
            e.idf = std::log((1.0 + static_cast<double>(n_docs)) / (1.0 + static_cast<double>(df))) + 1.0;
            v.by_rank_.push_back(t);
        }
        return v;
    }

    std::size_t size() const { return by_rank_.size(); }
    std::size_t doc_count() const { return n_docs_; }
    const VocabEntry* find(const std::string& t) const {
        auto it = entries_.find(t);
        return it == entries_.end() ? nullptr : &it->second;
    }
    /// 0 for unknown tokens.
    std::size_t rank(const std::string& t) const {
        const auto* e = find(t);
        return e ? e->rank : 0;
    }
    double idf(const std::string& t) const {
        const auto* e = find(t);
        if (!e) throw ArgumentError("token '" + t + "' not in vocabulary");
        return e->idf;
    }
    const std::string& token_at_rank(std::size_t r) const { return by_rank_.at(r - 1); }

private:
    std::map<std::string, VocabEntry> entries_;
    std::vector<std::string> by_rank_;
    std::size_t n_docs_ = 0;
};

inline Vocabulary tfidf_fit(const std::vector<std::vector<std::string>>& docs) { return Vocabulary::fit(docs); }

inline Vocabulary tfidf_fit(const TextCorpus& corpus) {
    std::vector<std::vector<std::string>> docs;
    for (const auto& e : corpus) docs.push_back(e.tokens);
    return Vocabulary::fit(docs);
}

/// Raw-count tf times idf over the `dim` top-ranked tokens, L2-normalised, then
/// min-max rescaled to [0,1]. Unknown tokens are ignored.
inline FeatureVector tfidf_transform(const std::vector<std::string>& doc, const Vocabulary& vocab, std::size_t dim) {
    FeatureVector v(dim, 0.0);
    for (const auto& t : doc) {
        const auto* e = vocab.find(t);
        if (e && e->rank <= dim) v[e->rank - 1] += e->idf;
    }
    double norm = 0;
    for (double x : v) norm += x * x;
    if (norm == 0.0) return v;
    norm = std::sqrt(norm);
    for (auto& x : v) x /= norm;
    const auto [mn, mx] = std::minmax_element(v.begin(), v.end());
    const double lo = *mn, hi = *mx;
    if (hi > lo)
        for (auto& x : v) x = (x - lo) / (hi - lo);
    return v;
}

/// rank / |V| per position (unknown -> 0), right-padded with zeros to max_len.
inline FeatureVector rank_vectorize(const std::vector<std::string>& tokens, const Vocabulary& vocab,
                                    std::size_t max_len) {
    if (tokens.size() > max_len) {
        throw DimensionError("sentence of " + std::to_string(tokens.size()) + " tokens exceeds max_len " +
                             std::to_string(max_len));
    }
    if (vocab.size() == 0) throw DataError("empty vocabulary");
    FeatureVector v(max_len, 0.0);
    for (std::size_t i = 0; i < tokens.size(); ++i)
        v[i] = static_cast<double>(vocab.rank(tokens[i])) / static_cast<double>(vocab.size());
    return v;
}

/// Token ids for embedding lookup: the vocabulary rank, 0 for unknown words.
inline std::vector<int> token_ids(const std::vector<std::string>& tokens, const Vocabulary& vocab) {
    std::vector<int> ids;
    for (const auto& t : tokens) ids.push_back(static_cast<int>(vocab.rank(t)));
    return ids;
}

/// Splits a vector into consecutive chunks of `width` (last one zero-padded).
inline std::vector<FeatureVector> chunk_features(const FeatureVector& v, std::size_t width) {
    if (width == 0) throw ArgumentError("chunk width must be positive");
    std::vector<FeatureVector> out;
    for (std::size_t i = 0; i < v.size(); i += width) {
        FeatureVector c(width, 0.0);
        for (std::size_t j = 0; j < width && i + j < v.size(); ++j) c[j] = v[i + j];
        out.push_back(std::move(c));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Images

struct ImageSet {
    std::size_t rows = 0, cols = 0;
    std::vector<std::vector<double>> images;  // row-major, values in [0,1]
    std::vector<int> labels;
};

enum class PatchMode { Row, Column, Block };

struct ImagePatchSpec {
    PatchMode mode = PatchMode::Row;
    std::size_t bh = 1, bw = 1;  // block size, used in Block mode
};

inline std::vector<FeatureVector> patch_image(std::span<const double> px, std::size_t h, std::size_t w,
                                              const ImagePatchSpec& spec) {
    if (px.size() != h * w) throw DimensionError("pixel count does not match image shape");
    std::vector<FeatureVector> out;
    switch (spec.mode) {
        case PatchMode::Row:
            for (std::size_t r = 0; r < h; ++r) out.emplace_back(px.begin() + r * w, px.begin() + (r + 1) * w);
            break;
        case PatchMode::Column:
            for (std::size_t c = 0; c < w; ++c) {
                FeatureVector v(h);
                for (std::size_t r = 0; r < h; ++r) v[r] = px[r * w + c];
                out.push_back(std::move(v));
            }
            break;
        case PatchMode::Block:
            if (spec.bh == 0 || spec.bw == 0 || h % spec.bh || w % spec.bw)
                throw ConfigError("block size must divide the image size");
            for (std::size_t br = 0; br < h / spec.bh; ++br)
                for (std::size_t bc = 0; bc < w / spec.bw; ++bc) {
                    FeatureVector v;
                    for (std::size_t r = 0; r < spec.bh; ++r)
                        for (std::size_t c = 0; c < spec.bw; ++c)
                            v.push_back(px[(br * spec.bh + r) * w + bc * spec.bw + c]);
                    out.push_back(std::move(v));
                }
            break;
    }
    return out;
}

inline Dataset image_dataset(const ImageSet& set, const ImagePatchSpec& spec) {
    Dataset ds;
    int mx = 0;
    for (std::size_t i = 0; i < set.images.size(); ++i) {
        ds.samples.push_back({patch_image(set.images[i], set.rows, set.cols, spec), {}, set.labels[i]});
        mx = std::max(mx, set.labels[i]);
    }
    ds.class_count = static_cast<std::size_t>(mx) + 1;
    return ds;
}

namespace detail {

inline std::vector<unsigned char> read_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::uint32_t be32(const std::vector<unsigned char>& b, std::size_t off) {
    return (std::uint32_t{b[off]} << 24) | (std::uint32_t{b[off + 1]} << 16) | (std::uint32_t{b[off + 2]} << 8) |
           std::uint32_t{b[off + 3]};
}

}  // namespace detail

/// IDX image/label pair. Pixels are scaled by 1/255.
inline ImageSet parse_idx(const std::vector<unsigned char>& img, const std::vector<unsigned char>& lab,
                          const std::string& img_name = "images", const std::string& lab_name = "labels") {
    if (img.size() < 16) throw DataError(img_name + ": truncated IDX header");
    if (detail::be32(img, 0) != 0x00000803) throw DataError(img_name + ": bad magic, expected 0x00000803");
    if (lab.size() < 8) throw DataError(lab_name + ": truncated IDX header");
    if (detail::be32(lab, 0) != 0x00000801) throw DataError(lab_name + ": bad magic, expected 0x00000801");
    const std::size_t n = detail::be32(img, 4), rows = detail::be32(img, 8), cols = detail::be32(img, 12);
    const std::size_t nl = detail::be32(lab, 4);
    if (n != nl) throw DataError("image count " + std::to_string(n) + " != label count " + std::to_string(nl));
    if (img.size() != 16 + n * rows * cols) throw DataError(img_name + ": payload size does not match header");
    if (lab.size() != 8 + n) throw DataError(lab_name + ": payload size does not match header");
    ImageSet set{rows, cols, {}, {}};
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> px(rows * cols);
        for (std::size_t p = 0; p < px.size(); ++p) px[p] = img[16 + i * rows * cols + p] / 255.0;
        set.images.push_back(std::move(px));
        set.labels.push_back(lab[8 + i]);
    }
    return set;
}

inline ImageSet load_idx_images(const std::string& images_path, const std::string& labels_path) {
    return parse_idx(detail::read_bytes(images_path), detail::read_bytes(labels_path), images_path, labels_path);
}

/// 64 pixel columns (0..16) and a label column; a non-numeric first row is a header.
inline ImageSet parse_digits_csv(std::istream& in, const std::string& source = "<stream>") {
    ImageSet set{8, 8, {}, {}};
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
        auto fail = [&](const std::string& why) {
            return DataError(source + ":" + std::to_string(lineno) + ": " + why);
        };
        if (cells.size() != 65) throw fail("expected 65 columns, got " + std::to_string(cells.size()));
        std::vector<double> v(65);
        bool numeric = true;
        for (std::size_t i = 0; i < 65; ++i) {
            try {
                std::size_t used = 0;
                v[i] = std::stod(cells[i], &used);
                if (used != cells[i].size()) numeric = false;
            } catch (const std::exception&) {
                numeric = false;
            }
        }
        if (!numeric) {
            if (lineno == 1) continue;  // header
            throw fail("non-numeric cell");
        }
        std::vector<double> px(64);
        for (std::size_t i = 0; i < 64; ++i) {
            if (v[i] < 0 || v[i] > 16) throw fail("pixel outside 0..16");
            px[i] = v[i] / 16.0;
        }
        if (v[64] < 0 || v[64] != std::floor(v[64])) throw fail("label must be a non-negative integer");
        set.images.push_back(std::move(px));
        set.labels.push_back(static_cast<int>(v[64]));
    }
    if (set.images.empty()) throw DataError(source + ": no samples");
    return set;
}

inline ImageSet load_digits_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path);
    return parse_digits_csv(in, path);
}

// ---------------------------------------------------------------------------
// Splitting

/// Seeded Fisher-Yates shuffle (own index draw so the order does not depend on
/// the standard library's distribution implementation), then a head/tail cut.
/// If a class ends up on only one side, one of its samples is swapped across
/// with a sample of the most populous class on the other side.
inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(const std::vector<int>& labels,
                                                                                    double train_fraction,
                                                                                    std::uint64_t seed) {
    const std::size_t n = labels.size();
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ArgumentError("train fraction must be in (0, 1)");
    const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
    if (n_train == 0 || n_train >= n) throw ArgumentError("split leaves an empty side");
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    std::mt19937_64 rng(seed);
    for (std::size_t i = n; i-- > 1;) std::swap(idx[i], idx[rng() % (i + 1)]);
    std::vector<std::size_t> train(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
    std::vector<std::size_t> test(idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());

    auto fix = [&](std::vector<std::size_t>& has, std::vector<std::size_t>& lacks) {
        std::map<int, std::size_t> cnt_has, cnt_lacks;
        for (auto i : has) ++cnt_has[labels[i]];
        for (auto i : lacks) ++cnt_lacks[labels[i]];
        for (auto [cls, c] : cnt_has) {
            if (cnt_lacks.count(cls) || c < 2) continue;
            // donor in `lacks`: most populous class with at least 2 members
            int donor = -1;
            std::size_t best = 1;
            for (auto [k, m] : cnt_lacks)
                if (m > best) best = m, donor = k;
            if (donor < 0) continue;
            auto a = std::find_if(has.begin(), has.end(), [&](std::size_t i) { return labels[i] == cls; });
            auto b = std::find_if(lacks.begin(), lacks.end(), [&](std::size_t i) { return labels[i] == donor; });
            std::swap(*a, *b);
            --cnt_has[cls];
            ++cnt_lacks[cls];
            --cnt_lacks[donor];
            ++cnt_has[donor];
        }
    };
    fix(train, test);
    fix(test, train);
    return {train, test};
}

inline std::pair<Dataset, Dataset> split_dataset(const Dataset& ds, double train_fraction, std::uint64_t seed) {
    std::vector<int> labels;
    for (const auto& s : ds.samples) labels.push_back(s.label);
    auto [tr, te] = split_indices(labels, train_fraction, seed);
    Dataset a{{}, ds.class_count}, b{{}, ds.class_count};
    for (auto i : tr) a.samples.push_back(ds.samples[i]);
    for (auto i : te) b.samples.push_back(ds.samples[i]);
    return {std::move(a), std::move(b)};
}

}  // namespace qseq
