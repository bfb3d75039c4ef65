// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <variant>
#include <vector>

#include "quanta/error.hpp"
#include "quanta/lora.hpp"
#include "quanta/matrix.hpp"
#include "quanta/plan.hpp"

// QTF container, version 1. All integers and scalars little-endian; scalar
// payloads are row-major 64-bit floats.
//
//   header:  magic "QNTA" | u16 version = 1 | u8 scalar code = 0 (f64)
//            | u32 record count
//   record:  u8 kind (0 = gate plan, 1 = dense matrix, 2 = LoRA adapter)
//
//   kind 0:  u32 n_in,  n_in x u32 dims
//            u32 n_out, n_out x u32 dims
//            u32 in_len | u32 out_len          (0 = axis-shape total)
//            u32 gate count
//            per gate: u32 axis_m | u32 axis_n | u32 out_m | u32 out_n
//            per gate: u64 payload length (scalar count, validated on read)
//            payloads in gate order
//   kind 1:  u32 rows | u32 cols | u64 payload length | payload
//   kind 2:  u32 out_dim | u32 in_dim | u32 r | f64 alpha
//            u64 len(A) | u64 len(B) | payload A | payload B
//
// The reader rejects trailing bytes; write -> read is bitwise identity.

namespace quanta {

using QtfRecord = std::variant<QuantaPlan, Matrix, LoraAdapter>;

namespace detail {

class ByteWriter {
public:
    void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
    void u16(std::uint16_t v) { le(v, 2); }
    void u32(std::uint32_t v) { le(v, 4); }
    void u64(std::uint64_t v) { le(v, 8); }
    void f64(double v) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, 8);
        u64(bits);
    }
    void f64_span(const std::vector<double>& v) {
        for (double x : v) f64(x);
    }
    const std::string& bytes() const { return buf_; }

private:
    void le(std::uint64_t v, int n) {
        for (int i = 0; i < n; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    }
    std::string buf_;
};

class ByteReader {
public:
    ByteReader(const char* data, std::size_t size) : data_(data), size_(size) {}

    std::uint8_t u8() { return static_cast<std::uint8_t>(take(1)[0]); }
    std::uint16_t u16() { return static_cast<std::uint16_t>(le(2)); }
    std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
    std::uint64_t u64() { return le(8); }
    double f64() {
        const std::uint64_t bits = le(8);
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }
    std::vector<double> f64_span(std::uint64_t count) {
        std::vector<double> v(count);
        for (std::uint64_t i = 0; i < count; ++i) v[i] = f64();
        return v;
    }
    bool exhausted() const { return pos_ == size_; }
    std::size_t remaining() const { return size_ - pos_; }

private:
    const char* take(std::size_t n) {
        if (pos_ + n > size_) throw IoError("qtf: truncated file");
        const char* p = data_ + pos_;
        pos_ += n;
        return p;
    }
    std::uint64_t le(std::size_t n) {
        const char* p = take(n);
        std::uint64_t v = 0;
        for (std::size_t i = 0; i < n; ++i)
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[i])) << (8 * i);
        return v;
    }
    const char* data_;
    std::size_t size_;
    std::size_t pos_ = 0;
};

inline void write_record(ByteWriter& w, const QtfRecord& record) {
    if (const auto* plan = std::get_if<QuantaPlan>(&record)) {
        validate_plan(*plan);
        w.u8(0);
        w.u32(static_cast<std::uint32_t>(plan->in_shape.rank()));
        for (std::size_t d : plan->in_shape.dims) w.u32(static_cast<std::uint32_t>(d));
        w.u32(static_cast<std::uint32_t>(plan->out_shape.rank()));
        for (std::size_t d : plan->out_shape.dims) w.u32(static_cast<std::uint32_t>(d));
        w.u32(static_cast<std::uint32_t>(plan->in_len));
        w.u32(static_cast<std::uint32_t>(plan->out_len));
        w.u32(static_cast<std::uint32_t>(plan->gates.size()));
        for (const GateSpec& g : plan->gates) {
            w.u32(static_cast<std::uint32_t>(g.axis_m));
            w.u32(static_cast<std::uint32_t>(g.axis_n));
            w.u32(static_cast<std::uint32_t>(g.out_m));
            w.u32(static_cast<std::uint32_t>(g.out_n));
        }
        for (const GateSpec& g : plan->gates) w.u64(g.tensor.data.size());
        for (const GateSpec& g : plan->gates) w.f64_span(g.tensor.data);
    } else if (const auto* m = std::get_if<Matrix>(&record)) {
        w.u8(1);
        w.u32(static_cast<std::uint32_t>(m->rows));
        w.u32(static_cast<std::uint32_t>(m->cols));
        w.u64(m->data.size());
        w.f64_span(m->data);
    } else {
        const auto& lora = std::get<LoraAdapter>(record);
        w.u8(2);
        w.u32(static_cast<std::uint32_t>(lora.b.rows));
        w.u32(static_cast<std::uint32_t>(lora.a.cols));
        w.u32(static_cast<std::uint32_t>(lora.rank));
        w.f64(lora.alpha);
        w.u64(lora.a.data.size());
        w.u64(lora.b.data.size());
        w.f64_span(lora.a.data);
        w.f64_span(lora.b.data);
    }
}

inline QtfRecord read_record(ByteReader& r) {
    const std::uint8_t kind = r.u8();
    if (kind == 0) {
        QuantaPlan plan;
        const std::uint32_t n_in = r.u32();
        std::vector<std::size_t> in_dims(n_in);
        for (auto& d : in_dims) d = r.u32();
        const std::uint32_t n_out = r.u32();
        std::vector<std::size_t> out_dims(n_out);
        for (auto& d : out_dims) d = r.u32();
        if (n_in == 0 || n_out == 0) throw IoError("qtf: empty axis shape");
        plan.in_shape = AxisShape(in_dims);
        plan.out_shape = AxisShape(out_dims);
        plan.in_len = r.u32();
        plan.out_len = r.u32();
        const std::uint32_t n_gates = r.u32();
        plan.gates.resize(n_gates);
        for (GateSpec& g : plan.gates) {
            g.axis_m = r.u32();
            g.axis_n = r.u32();
            g.out_m = r.u32();
            g.out_n = r.u32();
        }
        // Reconstruct column extents via the shape trace, then check the
        // declared payload lengths against them.
        std::vector<std::size_t> dims = plan.in_shape.dims;
        std::vector<std::size_t> expect;
        for (GateSpec& g : plan.gates) {
            if (g.axis_m >= dims.size() || g.axis_n >= dims.size() || g.axis_m == g.axis_n)
                throw IoError("qtf: bad gate axes");
            const std::size_t cols = dims[g.axis_m] * dims[g.axis_n];
            const std::size_t rows = g.out_m * g.out_n;
            expect.push_back(rows * cols);
            g.tensor = Matrix(rows, cols);
            dims[g.axis_m] = g.out_m;
            dims[g.axis_n] = g.out_n;
        }
        for (std::size_t i = 0; i < plan.gates.size(); ++i)
            if (r.u64() != expect[i]) throw IoError("qtf: gate payload length mismatch");
        for (GateSpec& g : plan.gates) g.tensor.data = r.f64_span(g.tensor.data.size());
        validate_plan(plan);
        return plan;
    }
    if (kind == 1) {
        const std::uint32_t rows = r.u32();
        const std::uint32_t cols = r.u32();
        const std::uint64_t len = r.u64();
        if (len != static_cast<std::uint64_t>(rows) * cols)
            throw IoError("qtf: matrix payload length mismatch");
        Matrix m(rows, cols);
        m.data = r.f64_span(len);
        return m;
    }
    if (kind == 2) {
        const std::uint32_t out_dim = r.u32();
        const std::uint32_t in_dim = r.u32();
        const std::uint32_t rank = r.u32();
        const double alpha = r.f64();
        const std::uint64_t len_a = r.u64();
        const std::uint64_t len_b = r.u64();
        if (len_a != static_cast<std::uint64_t>(rank) * in_dim ||
            len_b != static_cast<std::uint64_t>(out_dim) * rank)
            throw IoError("qtf: adapter payload length mismatch");
        LoraAdapter lora;
        lora.rank = rank;
        lora.alpha = alpha;
        lora.a = Matrix(rank, in_dim);
        lora.b = Matrix(out_dim, rank);
        lora.a.data = r.f64_span(len_a);
        lora.b.data = r.f64_span(len_b);
        return lora;
    }
    throw IoError("qtf: unknown record kind " + std::to_string(kind));
}

}  // namespace detail

inline std::string qtf_to_bytes(const std::vector<QtfRecord>& records) {
    detail::ByteWriter w;
    w.u8('Q');
    w.u8('N');
    w.u8('T');
    w.u8('A');
    w.u16(1);
    w.u8(0);  // 64-bit scalars
    w.u32(static_cast<std::uint32_t>(records.size()));
    for (const QtfRecord& rec : records) detail::write_record(w, rec);
    return w.bytes();
}

inline std::vector<QtfRecord> qtf_from_bytes(const char* data, std::size_t size) {
    detail::ByteReader r(data, size);
    if (r.remaining() < 4 || r.u8() != 'Q' || r.u8() != 'N' || r.u8() != 'T' || r.u8() != 'A')
        throw IoError("qtf: bad magic");
    const std::uint16_t version = r.u16();
    if (version != 1) throw IoError("qtf: unsupported version " + std::to_string(version));
    const std::uint8_t scalar = r.u8();
    if (scalar != 0) throw IoError("qtf: unsupported scalar width code");
    const std::uint32_t count = r.u32();
    std::vector<QtfRecord> records;
    records.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) records.push_back(detail::read_record(r));
    if (!r.exhausted()) throw IoError("qtf: trailing bytes after the last record");
    return records;
}

inline void write_qtf(const std::string& path, const std::vector<QtfRecord>& records) {
    const std::string bytes = qtf_to_bytes(records);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed: " + path);
}

inline std::vector<QtfRecord> read_qtf(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return qtf_from_bytes(bytes.data(), bytes.size());
}

}  // namespace quanta
