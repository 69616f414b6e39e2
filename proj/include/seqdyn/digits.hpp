#pragma once

// Binary digit tapes for the doubling map.
//
// In IEEE doubles, x -> 2x mod 1 is *exact*, so every machine orbit of the
// pure doubling map reaches the fixed point 0 within ~53 steps: the float
// orbit of a dyadic rational is useless for long-horizon statistics. A digit
// tape sidesteps this: the doubling orbit of x = 0.b0 b1 b2 ... is the shift
// on its binary expansion, so we store the expansion itself and read the
// orbit point at time j as the 53-bit window starting at bit j. Each window
// equals the true orbit point to within 2^-53, uniformly in j.

#include <cstdint>
#include <string>
#include <vector>

#include "seqdyn/core.hpp"

namespace seqdyn {

/// Run-length description of a digit program: `pattern` repeated until the
/// block holds `len` bits (the last repetition may be truncated).
struct digit_block {
    long len{0};
    std::string pattern; // nonempty string over {'0','1'}
};

class bit_tape {
public:
    bit_tape() = default;

    /// Fair-coin tape: the binary expansion of a Lebesgue-random point.
    static bit_tape random(rng_stream& rng, long nbits) {
        require(nbits > 0, errc::parameter_out_of_range, "tape length must be positive");
        bit_tape t;
        t.bits_.resize(static_cast<std::size_t>(nbits));
        long i = 0;
        while (i < nbits) {
            std::uint64_t w = rng.bits();
            for (int k = 0; k < 64 && i < nbits; ++k, ++i)
                t.bits_[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>((w >> k) & 1u);
        }
        return t;
    }

    /// Programmed tape from run-length blocks.
    static bit_tape from_blocks(const std::vector<digit_block>& blocks) {
        bit_tape t;
        for (const auto& b : blocks) {
            require(b.len > 0 && !b.pattern.empty(), errc::parameter_out_of_range,
                    "digit block needs positive length and nonempty pattern");
            for (long i = 0; i < b.len; ++i) {
                char c = b.pattern[static_cast<std::size_t>(i) % b.pattern.size()];
                require(c == '0' || c == '1', errc::parameter_out_of_range,
                        "digit pattern must be binary");
                t.bits_.push_back(static_cast<std::uint8_t>(c - '0'));
            }
        }
        require(!t.bits_.empty(), errc::parameter_out_of_range, "empty digit program");
        return t;
    }

    long size() const { return static_cast<long>(bits_.size()); }
    int bit(long i) const { return bits_[static_cast<std::size_t>(i)]; }

    /// Number of valid orbit points: windows [j, j+53) that fit on the tape.
    long horizon() const { return size() - 53 + 1; }

    /// Orbit point at time j: x_j = 0.b_j b_{j+1} ... truncated to 53 bits.
    double window(long j) const {
        std::uint64_t m = 0;
        const std::size_t base = static_cast<std::size_t>(j);
        for (int k = 0; k < 53; ++k) m = (m << 1) | bits_[base + static_cast<std::size_t>(k)];
        return static_cast<double>(m) * 0x1.0p-53;
    }

    double value() const { return window(0); }

private:
    std::vector<std::uint8_t> bits_;

    friend class window_cursor;
};

/// Sequential reader of tape windows: advancing by one step shifts one bit in,
/// so a full orbit sweep costs O(1) per point instead of O(53).
class window_cursor {
public:
    explicit window_cursor(const bit_tape& t, long start = 0) : tape_(&t), pos_(start) {
        require(start >= 0 && start + 53 <= t.size(), errc::parameter_out_of_range,
                "cursor window out of range");
        word_ = 0;
        for (int k = 0; k < 53; ++k)
            word_ = (word_ << 1) | tape_->bits_[static_cast<std::size_t>(start + k)];
    }

    double value() const { return static_cast<double>(word_) * 0x1.0p-53; }
    long position() const { return pos_; }
    bool at_end() const { return pos_ + 53 >= tape_->size(); }

    void advance() {
        word_ = ((word_ << 1) | tape_->bits_[static_cast<std::size_t>(pos_ + 53)]) &
                ((1ull << 53) - 1);
        ++pos_;
    }

private:
    const bit_tape* tape_;
    long pos_;
    std::uint64_t word_;
};

/// Digit program whose Birkhoff averages of cos(2 pi x) under doubling have no
/// limit: blocks alternate between the fixed point 0 (pattern "0", average
/// +1) and the 2-cycle {1/3, 2/3} (pattern "01", average -1/2). Each block is
/// 20x the total length so far, so each block's regime dominates the running
/// average at its end; the checkpoint averages approach the two-cycle
/// (A + 20)/21, (A - 10)/21 with fixed points +0.932 and -0.432.
inline std::vector<digit_block> irregular_digit_blocks(long total_bits) {
    require(total_bits >= 128, errc::parameter_out_of_range, "program too short");
    std::vector<digit_block> blocks;
    long done = 0;
    bool zero_block = true;
    long next_len = 4;
    while (done < total_bits) {
        long len = std::min(next_len, total_bits - done);
        blocks.push_back({len, zero_block ? "0" : "01"});
        done += len;
        next_len = 20 * done;
        zero_block = !zero_block;
    }
    return blocks;
}

/// Cumulative block-end times of a digit program (checkpoints where the
/// running average is extremal).
inline std::vector<long> block_end_times(const std::vector<digit_block>& blocks) {
    std::vector<long> ends;
    long t = 0;
    for (const auto& b : blocks) {
        t += b.len;
        ends.push_back(t);
    }
    return ends;
}

} // namespace seqdyn
