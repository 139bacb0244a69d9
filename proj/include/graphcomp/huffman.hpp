#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <queue>
#include <span>
#include <vector>

#include "graphcomp/bytes.hpp"

namespace graphcomp {

/// MSB-first bit packing.
class BitWriter {
public:
    void put(std::uint64_t code, unsigned len) {
        for (unsigned i = len; i-- > 0;) {
            acc_ = static_cast<std::uint8_t>((acc_ << 1) | ((code >> i) & 1u));
            if (++fill_ == 8) {
                bytes_.push_back(acc_);
                acc_ = 0;
                fill_ = 0;
            }
        }
    }

    Bytes finish() {
        if (fill_) bytes_.push_back(static_cast<std::uint8_t>(acc_ << (8 - fill_)));
        acc_ = 0;
        fill_ = 0;
        return std::move(bytes_);
    }

private:
    Bytes bytes_;
    std::uint8_t acc_ = 0;
    unsigned fill_ = 0;
};

class BitReader {
public:
    explicit BitReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    unsigned get() {
        require(pos_ < bytes_.size() * 8, ErrorKind::format, "bitstream exhausted");
        const unsigned bit = (bytes_[pos_ >> 3] >> (7 - (pos_ & 7))) & 1u;
        ++pos_;
        return bit;
    }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

/// Canonical Huffman code over a sparse alphabet of 32-bit symbols.
class HuffmanCode {
public:
    static constexpr unsigned max_length = 32;

    HuffmanCode() = default;

    /// Builds lengths from frequencies; a lone symbol gets a 1-bit code.
    static HuffmanCode from_frequencies(const std::map<std::uint32_t, std::uint64_t>& freq) {
        HuffmanCode h;
        if (freq.empty()) return h;
        std::vector<std::pair<std::uint32_t, std::uint64_t>> syms(freq.begin(), freq.end());
        if (syms.size() == 1) {
            h.set_lengths({{syms[0].first, 1}});
            return h;
        }
        while (true) {
            auto lengths = build_lengths(syms);
            const auto longest = std::max_element(lengths.begin(), lengths.end(),
                                                  [](auto& a, auto& b) { return a.second < b.second; })->second;
            if (longest <= max_length) {
                h.set_lengths(std::move(lengths));
                return h;
            }
            // Flatten the distribution until the tree fits.
            for (auto& s : syms) s.second = std::max<std::uint64_t>(1, s.second >> 1);
        }
    }

    /// (symbol, length) pairs; symbols need not be sorted.
    void set_lengths(std::vector<std::pair<std::uint32_t, unsigned>> lengths) {
        std::sort(lengths.begin(), lengths.end(), [](auto& a, auto& b) {
            return a.second != b.second ? a.second < b.second : a.first < b.first;
        });
        lengths_ = std::move(lengths);
        codes_.clear();
        first_.assign(max_length + 2, 0);
        count_.assign(max_length + 2, 0);
        offset_.assign(max_length + 2, 0);
        std::uint64_t code = 0;
        unsigned prev = lengths_.empty() ? 0 : lengths_.front().second;
        for (std::size_t i = 0; i < lengths_.size(); ++i) {
            const auto [sym, len] = lengths_[i];
            require(len >= 1 && len <= max_length, ErrorKind::format, "invalid Huffman code length");
            if (i > 0) {
                ++code;
                code <<= (len - prev);
            }
            prev = len;
            if (count_[len] == 0) {
                first_[len] = code;
                offset_[len] = i;
            }
            ++count_[len];
            require(code < (std::uint64_t{1} << len), ErrorKind::format, "over-subscribed Huffman code");
            codes_[sym] = {code, len};
        }
    }

    const std::vector<std::pair<std::uint32_t, unsigned>>& lengths() const { return lengths_; }
    bool empty() const { return lengths_.empty(); }

    void encode(std::uint32_t symbol, BitWriter& out) const {
        auto it = codes_.find(symbol);
        require(it != codes_.end(), ErrorKind::invalid_value, "symbol missing from Huffman table");
        out.put(it->second.first, it->second.second);
    }

    std::uint32_t decode(BitReader& in) const {
        std::uint64_t code = 0;
        for (unsigned len = 1; len <= max_length; ++len) {
            code = (code << 1) | in.get();
            if (count_[len] && code >= first_[len] && code - first_[len] < count_[len])
                return lengths_[offset_[len] + (code - first_[len])].first;
        }
        throw Error(ErrorKind::format, "invalid Huffman code in bitstream");
    }

    /// varint count, then (symbol delta varint, length u8) in ascending symbol order.
    void write_table(ByteWriter& w) const {
        auto by_symbol = lengths_;
        std::sort(by_symbol.begin(), by_symbol.end());
        w.put_varint(by_symbol.size());
        std::uint32_t prev = 0;
        for (auto [sym, len] : by_symbol) {
            w.put_varint(sym - prev);
            w.put_u8(static_cast<std::uint8_t>(len));
            prev = sym;
        }
    }

    static HuffmanCode read_table(ByteReader& r) {
        const auto n = r.checked_size(r.get_varint(), 2);
        std::vector<std::pair<std::uint32_t, unsigned>> lengths;
        std::uint64_t sym = 0;
        for (std::size_t i = 0; i < n; ++i) {
            sym += r.get_varint();
            require(sym <= UINT32_MAX && (i == 0 || sym > lengths.back().first), ErrorKind::format,
                    "corrupt Huffman table");
            lengths.emplace_back(static_cast<std::uint32_t>(sym), r.get_u8());
        }
        HuffmanCode h;
        h.set_lengths(std::move(lengths));
        return h;
    }

private:
    static std::vector<std::pair<std::uint32_t, unsigned>> build_lengths(
        const std::vector<std::pair<std::uint32_t, std::uint64_t>>& syms) {
        struct Node {
            std::uint64_t weight;
            std::size_t id;
            bool operator>(const Node& o) const { return weight != o.weight ? weight > o.weight : id > o.id; }
        };
        const std::size_t n = syms.size();
        std::vector<std::size_t> parent(2 * n, 0);
        std::priority_queue<Node, std::vector<Node>, std::greater<>> heap;
        for (std::size_t i = 0; i < n; ++i) heap.push({syms[i].second, i});
        std::size_t next = n;
        while (heap.size() > 1) {
            auto a = heap.top();
            heap.pop();
            auto b = heap.top();
            heap.pop();
            parent[a.id] = parent[b.id] = next;
            heap.push({a.weight + b.weight, next++});
        }
        const std::size_t root = next - 1;
        std::vector<unsigned> depth(2 * n, 0);
        for (std::size_t i = root; i-- > 0;) depth[i] = depth[parent[i]] + 1;
        std::vector<std::pair<std::uint32_t, unsigned>> out;
        for (std::size_t i = 0; i < n; ++i) out.emplace_back(syms[i].first, depth[i]);
        return out;
    }

    std::vector<std::pair<std::uint32_t, unsigned>> lengths_;  // sorted by (length, symbol)
    std::map<std::uint32_t, std::pair<std::uint64_t, unsigned>> codes_;
    std::vector<std::uint64_t> first_, count_, offset_;
};

}  // namespace graphcomp
