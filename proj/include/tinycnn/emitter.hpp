#pragma once

// Verilog backend. Text generation only: the numeric contract lives in the
// fixed-point datapath, and precision_adjust mirrors its requantize step
// bit for bit. No HDL simulator is involved.

#include <algorithm>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tinycnn/datapath.hpp"
#include "tinycnn/detail/sha256.hpp"
#include "tinycnn/model.hpp"
#include "tinycnn/resource.hpp"

namespace tinycnn {

namespace detail {

inline std::string strf(const char* f, ...) {
    char buf[1024];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

inline int addr_bits(long long depth) {
    int bits = 1;
    while ((1LL << bits) < depth) ++bits;
    return bits;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Memfiles

inline int memfile_digits(int width) { return (width + 3) / 4; }

inline std::string emit_memfile(const std::vector<std::int32_t>& raws,
                                int width) {
    const std::int64_t lo = raw_min(width), hi = raw_max(width);
    const int digits = memfile_digits(width);
    const std::uint64_t mask =
        width == 64 ? ~0ull : ((std::uint64_t{1} << width) - 1);
    std::string out;
    out.reserve(raws.size() * (digits + 1));
    char line[24];
    for (std::int32_t raw : raws) {
        if (raw < lo || raw > hi)
            throw Error(detail::strf("emit_memfile: raw %d out of %d-bit range",
                                     raw, width));
        std::uint64_t bits = static_cast<std::uint64_t>(
                                 static_cast<std::int64_t>(raw)) &
                             mask;
        std::snprintf(line, sizeof line, "%0*llx\n", digits,
                      static_cast<unsigned long long>(bits));
        out += line;
    }
    return out;
}

inline std::vector<std::int32_t> parse_memfile(const std::string& text,
                                               int width) {
    const int digits = memfile_digits(width);
    std::vector<std::int32_t> raws;
    std::size_t pos = 0;
    int line_no = 0;
    while (pos < text.size()) {
        std::size_t nl = text.find('\n', pos);
        if (nl == std::string::npos) nl = text.size();
        ++line_no;
        std::string line = text.substr(pos, nl - pos);
        pos = nl + 1;
        if (static_cast<int>(line.size()) != digits)
            throw ParseError(detail::strf(
                "memfile line %d: expected %d hex digits", line_no, digits));
        std::uint64_t v = 0;
        for (char c : line) {
            int d;
            if (c >= '0' && c <= '9') d = c - '0';
            else if (c >= 'a' && c <= 'f') d = c - 'a' + 10;
            else if (c >= 'A' && c <= 'F') d = c - 'A' + 10;
            else
                throw ParseError(
                    detail::strf("memfile line %d: bad hex digit", line_no));
            v = (v << 4) | static_cast<std::uint64_t>(d);
        }
        if (width < 64 && v >= (std::uint64_t{1} << width))
            throw ParseError(detail::strf(
                "memfile line %d: value exceeds %d bits", line_no, width));
        std::int64_t raw = static_cast<std::int64_t>(v);
        if (width < 64 && (v >> (width - 1)) & 1)
            raw -= (std::int64_t{1} << width);
        raws.push_back(static_cast<std::int32_t>(raw));
    }
    return raws;
}

// ---------------------------------------------------------------------------
// Unit generators

inline std::string emit_conv_unit(int lanes, int width) {
    if (lanes < 1) throw Error("emit_conv_unit: lanes must be positive");
    const int acc_w = acc_budget_bits(width);
    std::ostringstream v;
    v << "// Convolution engine: LANES parallel MACs walk one 3x3 window per\n"
         "// request. acc_clear preloads the (pre-shifted) bias word.\n"
         "module conv_unit #(\n";
    v << detail::strf("    parameter integer WIDTH = %d,\n", width);
    v << detail::strf("    parameter integer LANES = %d,\n", lanes);
    v << detail::strf("    parameter integer ACC_W = %d\n", acc_w);
    v << ") (\n"
         "    input  wire                     clk,\n"
         "    input  wire                     rst,\n"
         "    input  wire                     acc_clear,\n"
         "    input  wire signed [ACC_W-1:0]  bias_acc,\n"
         "    input  wire                     win_valid,\n"
         "    output wire                     win_ready,\n"
         "    input  wire [9*WIDTH-1:0]       win_data,\n"
         "    input  wire [9*WIDTH-1:0]       filt_data,\n"
         "    output reg                      out_valid,\n"
         "    output reg  signed [ACC_W-1:0]  out_acc\n"
         ");\n"
         "    // one window takes ceil(9 / LANES) engine states\n"
         "    localparam integer TAP_STATES = (9 + LANES - 1) / LANES;\n"
         "\n"
         "    reg  [3:0]              tap_state;\n"
         "    reg  signed [ACC_W-1:0] acc;\n"
         "    wire [31:0]             tap_lo = tap_state * LANES;\n"
         "\n"
         "    wire signed [2*WIDTH-1:0] lane_prod [0:LANES-1];\n"
         "\n"
         "    // mac array\n"
         "    genvar g;\n"
         "    generate\n"
         "        for (g = 0; g < LANES; g = g + 1) begin : mac_array\n"
         "            wire                    active = (tap_lo + g) < 9;\n"
         "            wire [31:0]             tap_ix = active ? (tap_lo + g) "
         ": 32'd0;\n"
         "            wire signed [WIDTH-1:0] pix = win_data[tap_ix*WIDTH +: "
         "WIDTH];\n"
         "            wire signed [WIDTH-1:0] flt = filt_data[tap_ix*WIDTH +: "
         "WIDTH];\n"
         "            assign lane_prod[g] = active ? (pix * flt) : "
         "{(2*WIDTH){1'b0}};\n"
         "        end\n"
         "    endgenerate\n"
         "\n"
         "    integer i;\n"
         "    reg signed [ACC_W-1:0] sum_comb;\n"
         "    always @* begin\n"
         "        sum_comb = {ACC_W{1'b0}};\n"
         "        for (i = 0; i < LANES; i = i + 1)\n"
         "            sum_comb = sum_comb + lane_prod[i];\n"
         "    end\n"
         "\n"
         "    assign win_ready = !rst;\n"
         "\n"
         "    always @(posedge clk) begin\n"
         "        if (rst) begin\n"
         "            acc       <= {ACC_W{1'b0}};\n"
         "            tap_state <= 4'd0;\n"
         "            out_valid <= 1'b0;\n"
         "        end else begin\n"
         "            out_valid <= 1'b0;\n"
         "            if (acc_clear) begin\n"
         "                acc       <= bias_acc;\n"
         "                tap_state <= 4'd0;\n"
         "            end else if (win_valid && win_ready) begin\n"
         "                acc <= acc + sum_comb;\n"
         "                if (tap_state == TAP_STATES - 1) begin\n"
         "                    tap_state <= 4'd0;\n"
         "                    out_valid <= 1'b1;\n"
         "                    out_acc   <= acc + sum_comb;\n"
         "                end else begin\n"
         "                    tap_state <= tap_state + 4'd1;\n"
         "                end\n"
         "            end\n"
         "        end\n"
         "    end\n"
         "endmodule\n";
    return v.str();
}

inline std::string emit_feedforward(const NetworkSpec& spec, int layer,
                                    int width) {
    if (layer < 0 || layer >= static_cast<int>(spec.layers.size()) ||
        spec.layers[layer].kind != LayerKind::Conv2d)
        throw Error("emit_feedforward: layer is not a conv layer");
    const LayerSpec& ls = spec.layers[layer];
    const TensorShape in = spec.per_layer_shapes[layer].in;
    const long long fmap_depth = in.elements();
    const long long params = param_count(ls, in);
    const long long weight_words = weight_count(ls, in);
    const int fmap_aw = detail::addr_bits(fmap_depth);
    const int rom_aw = detail::addr_bits(params);
    std::ostringstream v;
    v << detail::strf(
        "// Layer %d feed: buffers the incoming feature map, then streams\n"
        "// 3x3 windows and filter taps to the convolution engine.\n",
        layer);
    v << detail::strf("module feedforward_l%d #(\n", layer);
    v << detail::strf("    parameter integer WIDTH = %d\n", width);
    v << ") (\n"
         "    input  wire                    clk,\n"
         "    input  wire                    rst,\n"
         "    input  wire                    in_valid,\n"
         "    output wire                    in_ready,\n"
         "    input  wire signed [WIDTH-1:0] in_data,\n"
         "    input  wire                    win_ready,\n"
         "    output reg                     win_valid,\n"
         "    output wire [9*WIDTH-1:0]      win_data,\n"
         "    output wire [9*WIDTH-1:0]      filt_data,\n"
         "    output wire signed [WIDTH-1:0] bias_data,\n"
         "    output reg                     row_done\n"
         ");\n";
    v << detail::strf(
        "    // feature-map buffer: %dx%dx%d input pixels\n"
        "    localparam integer FMAP_DEPTH  = %lld;\n",
        in.height, in.width, in.channels, fmap_depth);
    v << detail::strf(
        "    // filter + bias words for this layer\n"
        "    localparam integer PARAM_DEPTH = %lld;\n",
        params);
    v << detail::strf("    localparam integer WEIGHT_WORDS = %lld;\n",
                      weight_words);
    v << detail::strf("    localparam integer IN_H = %d;\n", in.height);
    v << detail::strf("    localparam integer IN_W = %d;\n", in.width);
    v << detail::strf("    localparam integer IN_C = %d;\n", in.channels);
    v << detail::strf("    localparam integer FMAP_AW = %d;\n", fmap_aw);
    v << detail::strf("    localparam integer ROM_AW  = %d;\n", rom_aw);
    v << "\n"
         "    reg signed [WIDTH-1:0] fmap_ram [0:FMAP_DEPTH-1];\n"
         "    reg signed [WIDTH-1:0] weight_rom [0:PARAM_DEPTH-1];\n";
    v << detail::strf("    initial $readmemh(\"weights/layer%d.mem\", "
                      "weight_rom);\n",
                      layer);
    v << "\n"
         "    // write side: fills the feature-map RAM in channel-major "
         "order\n"
         "    reg [31:0] wr_addr;\n"
         "    assign in_ready = !rst && (wr_addr < FMAP_DEPTH);\n"
         "    always @(posedge clk) begin\n"
         "        if (rst) wr_addr <= 32'd0;\n"
         "        else if (in_valid && in_ready) begin\n"
         "            fmap_ram[wr_addr[FMAP_AW-1:0]] <= in_data;\n"
         "            wr_addr <= wr_addr + 32'd1;\n"
         "        end\n"
         "    end\n"
         "\n"
         "    // read side: walks output positions, one 3x3 window per step;\n"
         "    // border taps outside the map contribute zero (same padding)\n"
         "    reg [31:0] rd_col, rd_row, rd_chan, rd_tap, out_chan;\n"
         "    reg signed [WIDTH-1:0] win_q  [0:8];\n"
         "    reg signed [WIDTH-1:0] filt_q [0:8];\n"
         "\n"
         "    wire [31:0] tap_y = rd_row + rd_tap / 3;\n"
         "    wire [31:0] tap_x = rd_col + rd_tap % 3;\n"
         "    wire in_bounds = (tap_y >= 1) && (tap_y <= IN_H) &&\n"
         "                     (tap_x >= 1) && (tap_x <= IN_W);\n"
         "    wire [31:0] src_ix = (rd_chan * IN_H + (tap_y - 1)) * IN_W\n"
         "                         + (tap_x - 1);\n"
         "    wire [31:0] flt_ix = (out_chan * IN_C + rd_chan) * 9 + rd_tap;\n"
         "\n"
         "    always @(posedge clk) begin\n"
         "        if (rst) begin\n"
         "            rd_col <= 32'd0; rd_row <= 32'd0;\n"
         "            rd_chan <= 32'd0; rd_tap <= 32'd0; out_chan <= 32'd0;\n"
         "            win_valid <= 1'b0; row_done <= 1'b0;\n"
         "        end else begin\n"
         "            row_done <= 1'b0;\n"
         "            if (wr_addr == FMAP_DEPTH && !win_valid) begin\n"
         "                win_q[rd_tap % 9]  <= in_bounds ?\n"
         "                    fmap_ram[src_ix[FMAP_AW-1:0]] : "
         "{WIDTH{1'b0}};\n"
         "                filt_q[rd_tap % 9] <= "
         "weight_rom[flt_ix[ROM_AW-1:0]];\n"
         "                if (rd_tap == 32'd8) begin\n"
         "                    rd_tap <= 32'd0;\n"
         "                    win_valid <= 1'b1;\n"
         "                end else rd_tap <= rd_tap + 32'd1;\n"
         "            end else if (win_valid && win_ready) begin\n"
         "                win_valid <= 1'b0;\n"
         "                if (rd_col == IN_W - 1) begin\n"
         "                    rd_col <= 32'd0;\n"
         "                    row_done <= 1'b1;\n"
         "                    if (rd_row == IN_H - 1) begin\n"
         "                        rd_row <= 32'd0;\n"
         "                        if (rd_chan == IN_C - 1) begin\n"
         "                            rd_chan <= 32'd0;\n"
         "                            out_chan <= out_chan + 32'd1;\n"
         "                        end else rd_chan <= rd_chan + 32'd1;\n"
         "                    end else rd_row <= rd_row + 32'd1;\n"
         "                end else rd_col <= rd_col + 32'd1;\n"
         "            end\n"
         "        end\n"
         "    end\n"
         "\n";
    if (ls.has_bias) {
        v << "    wire [31:0] bias_ix = WEIGHT_WORDS + out_chan;\n"
             "    assign bias_data = weight_rom[bias_ix[ROM_AW-1:0]];\n";
    } else {
        v << "    assign bias_data = {WIDTH{1'b0}};\n";
    }
    v << "\n"
         "    genvar g;\n"
         "    generate\n"
         "        for (g = 0; g < 9; g = g + 1) begin : pack\n"
         "            assign win_data[g*WIDTH +: WIDTH]  = win_q[g];\n"
         "            assign filt_data[g*WIDTH +: WIDTH] = filt_q[g];\n"
         "        end\n"
         "    endgenerate\n"
         "endmodule\n";
    return v.str();
}

inline std::string emit_dense_unit(int lanes, int width) {
    if (lanes < 1) throw Error("emit_dense_unit: lanes must be positive");
    const int acc_w = acc_budget_bits(width);
    std::ostringstream v;
    v << "// Fully-connected engine: LANES-wide MAC over (activation, "
         "weight)\n"
         "// beats. vec_start preloads the (pre-shifted) bias word.\n"
         "module dense_unit #(\n";
    v << detail::strf("    parameter integer WIDTH = %d,\n", width);
    v << detail::strf("    parameter integer LANES = %d,\n", lanes);
    v << detail::strf("    parameter integer ACC_W = %d\n", acc_w);
    v << ") (\n"
         "    input  wire                         clk,\n"
         "    input  wire                         rst,\n"
         "    input  wire                         vec_start,\n"
         "    input  wire signed [ACC_W-1:0]      bias_acc,\n"
         "    input  wire                         pair_valid,\n"
         "    output wire                         pair_ready,\n"
         "    input  wire [LANES*WIDTH-1:0]       a_data,\n"
         "    input  wire [LANES*WIDTH-1:0]       w_data,\n"
         "    input  wire                         vec_last,\n"
         "    output reg                          out_valid,\n"
         "    output reg  signed [ACC_W-1:0]      out_acc\n"
         ");\n"
         "    reg signed [ACC_W-1:0] acc;\n"
         "\n"
         "    wire signed [2*WIDTH-1:0] lane_prod [0:LANES-1];\n"
         "\n"
         "    // mac array\n"
         "    genvar g;\n"
         "    generate\n"
         "        for (g = 0; g < LANES; g = g + 1) begin : mac_array\n"
         "            wire signed [WIDTH-1:0] a = a_data[g*WIDTH +: WIDTH];\n"
         "            wire signed [WIDTH-1:0] w = w_data[g*WIDTH +: WIDTH];\n"
         "            assign lane_prod[g] = a * w;\n"
         "        end\n"
         "    endgenerate\n"
         "\n"
         "    integer i;\n"
         "    reg signed [ACC_W-1:0] sum_comb;\n"
         "    always @* begin\n"
         "        sum_comb = {ACC_W{1'b0}};\n"
         "        for (i = 0; i < LANES; i = i + 1)\n"
         "            sum_comb = sum_comb + lane_prod[i];\n"
         "    end\n"
         "\n"
         "    assign pair_ready = !rst;\n"
         "\n"
         "    always @(posedge clk) begin\n"
         "        if (rst) begin\n"
         "            acc <= {ACC_W{1'b0}};\n"
         "            out_valid <= 1'b0;\n"
         "        end else begin\n"
         "            out_valid <= 1'b0;\n"
         "            if (vec_start) acc <= bias_acc;\n"
         "            else if (pair_valid && pair_ready) begin\n"
         "                acc <= acc + sum_comb;\n"
         "                if (vec_last) begin\n"
         "                    out_valid <= 1'b1;\n"
         "                    out_acc   <= acc + sum_comb;\n"
         "                end\n"
         "            end\n"
         "        end\n"
         "    end\n"
         "endmodule\n";
    return v.str();
}

inline std::string emit_dense_feed(const NetworkSpec& spec, int layer,
                                   int lanes, int width) {
    if (layer < 0 || layer >= static_cast<int>(spec.layers.size()) ||
        spec.layers[layer].kind != LayerKind::Dense)
        throw Error("emit_dense_feed: layer is not a dense layer");
    if (lanes < 1) throw Error("emit_dense_feed: lanes must be positive");
    const LayerSpec& ls = spec.layers[layer];
    const TensorShape in = spec.per_layer_shapes[layer].in;
    const long long vec_depth = in.elements();
    const long long params = param_count(ls, in);
    const long long weight_words = weight_count(ls, in);
    const int vec_aw = detail::addr_bits(vec_depth);
    const int rom_aw = detail::addr_bits(params);
    std::ostringstream v;
    v << detail::strf(
        "// Layer %d feed: buffers the activation vector, then streams\n"
        "// LANES (activation, weight) pairs per beat, one unit at a time.\n",
        layer);
    v << detail::strf("module dense_feed_l%d #(\n", layer);
    v << detail::strf("    parameter integer WIDTH = %d,\n", width);
    v << detail::strf("    parameter integer LANES = %d\n", lanes);
    v << ") (\n"
         "    input  wire                    clk,\n"
         "    input  wire                    rst,\n"
         "    input  wire                    in_valid,\n"
         "    output wire                    in_ready,\n"
         "    input  wire signed [WIDTH-1:0] in_data,\n"
         "    input  wire                    pair_ready,\n"
         "    output wire                    pair_valid,\n"
         "    output wire                    vec_start,\n"
         "    output wire                    vec_last,\n"
         "    output wire [LANES*WIDTH-1:0]  a_data,\n"
         "    output wire [LANES*WIDTH-1:0]  w_data,\n"
         "    output wire signed [WIDTH-1:0] bias_data\n"
         ");\n";
    v << detail::strf("    localparam integer VEC_DEPTH    = %lld;\n",
                      vec_depth);
    v << detail::strf("    localparam integer PARAM_DEPTH  = %lld;\n", params);
    v << detail::strf("    localparam integer WEIGHT_WORDS = %lld;\n",
                      weight_words);
    v << detail::strf("    localparam integer OUT_UNITS    = %d;\n", ls.units);
    v << detail::strf("    localparam integer VEC_AW = %d;\n", vec_aw);
    v << detail::strf("    localparam integer ROM_AW = %d;\n", rom_aw);
    v << "\n"
         "    reg signed [WIDTH-1:0] vec_ram [0:VEC_DEPTH-1];\n"
         "    reg signed [WIDTH-1:0] weight_rom [0:PARAM_DEPTH-1];\n";
    v << detail::strf("    initial $readmemh(\"weights/layer%d.mem\", "
                      "weight_rom);\n",
                      layer);
    v << "\n"
         "    reg [31:0] wr_addr;\n"
         "    assign in_ready = !rst && (wr_addr < VEC_DEPTH);\n"
         "    always @(posedge clk) begin\n"
         "        if (rst) wr_addr <= 32'd0;\n"
         "        else if (in_valid && in_ready) begin\n"
         "            vec_ram[wr_addr[VEC_AW-1:0]] <= in_data;\n"
         "            wr_addr <= wr_addr + 32'd1;\n"
         "        end\n"
         "    end\n"
         "\n"
         "    // read side: one start beat per unit, then the MAC beats\n"
         "    reg [31:0] unit_ix, beat_ix;\n"
         "    reg streaming;\n"
         "    wire filled = (wr_addr == VEC_DEPTH);\n"
         "    wire [31:0] base = beat_ix * LANES;\n"
         "    assign vec_start  = filled && !streaming;\n"
         "    assign pair_valid = filled && streaming;\n"
         "    assign vec_last   = pair_valid && (base + LANES >= "
         "VEC_DEPTH);\n"
         "\n"
         "    always @(posedge clk) begin\n"
         "        if (rst) begin\n"
         "            unit_ix <= 32'd0; beat_ix <= 32'd0;\n"
         "            streaming <= 1'b0;\n"
         "        end else if (vec_start) begin\n"
         "            streaming <= 1'b1;\n"
         "        end else if (pair_valid && pair_ready) begin\n"
         "            if (vec_last) begin\n"
         "                streaming <= 1'b0;\n"
         "                beat_ix <= 32'd0;\n"
         "                unit_ix <= (unit_ix == OUT_UNITS - 1) ? 32'd0\n"
         "                                                      : unit_ix + "
         "32'd1;\n"
         "            end else beat_ix <= beat_ix + 32'd1;\n"
         "        end\n"
         "    end\n"
         "\n"
         "    genvar g;\n"
         "    generate\n"
         "        for (g = 0; g < LANES; g = g + 1) begin : lanes\n"
         "            wire [31:0] k = base + g;\n"
         "            wire in_range = k < VEC_DEPTH;\n"
         "            wire [31:0] wix = unit_ix * VEC_DEPTH + k;\n"
         "            assign a_data[g*WIDTH +: WIDTH] = in_range ?\n"
         "                vec_ram[k[VEC_AW-1:0]] : {WIDTH{1'b0}};\n"
         "            assign w_data[g*WIDTH +: WIDTH] = in_range ?\n"
         "                weight_rom[wix[ROM_AW-1:0]] : {WIDTH{1'b0}};\n"
         "        end\n"
         "    endgenerate\n"
         "\n";
    if (ls.has_bias) {
        v << "    wire [31:0] bias_ix = WEIGHT_WORDS + unit_ix;\n"
             "    assign bias_data = weight_rom[bias_ix[ROM_AW-1:0]];\n";
    } else {
        v << "    assign bias_data = {WIDTH{1'b0}};\n";
    }
    v << "endmodule\n";
    return v.str();
}

inline std::string emit_relu_unit(int width) {
    std::ostringstream v;
    v << "// Rectifier: the sign bit selects between zero and the input.\n"
         "module relu_unit #(\n";
    v << detail::strf("    parameter integer WIDTH = %d\n", width);
    v << ") (\n"
         "    input  wire                    in_valid,\n"
         "    input  wire signed [WIDTH-1:0] in_data,\n"
         "    output wire                    out_valid,\n"
         "    output wire signed [WIDTH-1:0] out_data\n"
         ");\n"
         "    assign out_data  = in_data[WIDTH-1] ? {WIDTH{1'b0}} : in_data;\n"
         "    assign out_valid = in_valid;\n"
         "endmodule\n";
    return v.str();
}

inline std::string emit_maxpool_unit(int m, int width) {
    if (m < 2) throw Error("emit_maxpool_unit: pool size must be at least 2");
    const int n = m * m;
    std::ostringstream v;
    v << detail::strf(
        "// %dx%d window maximum over a stride-%d walk of the feature map.\n",
        m, m, m);
    v << detail::strf("module maxpool_unit_m%d #(\n", m);
    v << detail::strf("    parameter integer WIDTH = %d\n", width);
    v << ") (\n"
         "    input  wire                    clk,\n"
         "    input  wire                    rst,\n"
         "    input  wire                    in_valid,\n"
         "    input  wire signed [WIDTH-1:0] in_data,\n"
         "    output reg                     out_valid,\n"
         "    output reg  signed [WIDTH-1:0] out_data\n"
         ");\n";
    v << detail::strf("    localparam integer WIN = %d;\n", n);
    v << "\n"
         "    // collect one window; the upstream feed walks windows in\n"
         "    // stride-" << m << " order, so elements arrive window-major\n"
         "    reg [31:0] fill;\n";
    v << detail::strf("    reg signed [WIDTH-1:0] w [0:%d];\n", n - 1);
    v << detail::strf(
        "    // stride-%d window addressing on the source map\n"
        "    reg [31:0] col_base;\n",
        m);
    v << "\n";
    // fold the stored window elements, then compare against the element
    // arriving on the capture cycle: exactly n-1 compares in total
    v << detail::strf("    // window maximum: %d compares\n", n - 1);
    for (int i = 1; i <= n - 2; ++i) {
        std::string prev = i == 1 ? "w[0]" : detail::strf("m%d", i - 1);
        v << detail::strf(
            "    wire signed [WIDTH-1:0] m%d = (%s > w[%d]) ? %s : w[%d];\n",
            i, prev.c_str(), i, prev.c_str(), i);
    }
    v << "\n"
         "    always @(posedge clk) begin\n"
         "        if (rst) begin\n"
         "            fill <= 32'd0;\n"
         "            col_base <= 32'd0;\n"
         "            out_valid <= 1'b0;\n"
         "        end else begin\n"
         "            out_valid <= 1'b0;\n"
         "            if (in_valid) begin\n"
         "                w[fill % WIN] <= in_data;\n"
         "                if (fill % WIN == WIN - 1) begin\n"
         "                    out_valid <= 1'b1;\n";
    v << detail::strf("                    out_data  <= (m%d > in_data) ? "
                      "m%d : in_data;\n",
                      n - 2, n - 2);
    v << detail::strf("                    col_base  <= col_base + 32'd%d;\n",
                      m);
    v << "                end\n"
         "                fill <= fill + 32'd1;\n"
         "            end\n"
         "        end\n"
         "    end\n"
         "endmodule\n";
    return v.str();
}

inline std::string emit_precision_adjust(int width) {
    const std::int64_t out_max = (std::int64_t{1} << (width - 1)) - 1;
    std::ostringstream v;
    v << "// Fraction-width change between stages: round half away from "
         "zero\n"
         "// when shrinking, exact left shift when widening, saturate to\n"
         "// the output width either way.\n"
         "module precision_adjust #(\n";
    v << detail::strf("    parameter integer IN_W  = %d,\n",
                      acc_budget_bits(width) + 2);
    v << "    parameter integer SHIFT = 0\n"
         ") (\n"
         "    input  wire signed [IN_W-1:0] in_data,\n";
    v << detail::strf("    output wire signed [%d:0] out_data,\n", width - 1);
    v << "    output wire sat_flag\n"
         ");\n";
    v << detail::strf("    localparam integer OUT_W = %d;\n", width);
    v << detail::strf("    localparam signed [IN_W-1:0] OUT_MAX = %lld;\n",
                      static_cast<long long>(out_max));
    v << "    localparam signed [IN_W-1:0] OUT_MIN = -OUT_MAX - 1;\n"
         "\n"
         "    wire signed [IN_W-1:0] shifted;\n"
         "    generate\n"
         "        if (SHIFT > 0) begin : g_round\n"
         "            // round half away from zero on the magnitude\n"
         "            wire neg = in_data[IN_W-1];\n"
         "            wire signed [IN_W-1:0] mag  = neg ? -in_data : "
         "in_data;\n"
         "            wire signed [IN_W-1:0] half =\n"
         "                {{(IN_W-1){1'b0}}, 1'b1} <<< (SHIFT - 1);\n"
         "            wire signed [IN_W-1:0] rmag = (mag + half) >>> SHIFT;\n"
         "            assign shifted = neg ? -rmag : rmag;\n"
         "        end else if (SHIFT == 0) begin : g_pass\n"
         "            // saturation-only path\n"
         "            assign shifted = in_data;\n"
         "        end else begin : g_widen\n"
         "            // exact, caller provides the headroom\n"
         "            assign shifted = in_data <<< (-SHIFT);\n"
         "        end\n"
         "    endgenerate\n"
         "\n"
         "    assign sat_flag = (shifted > OUT_MAX) || (shifted < OUT_MIN);\n"
         "    assign out_data = (shifted > OUT_MAX) ? OUT_MAX[OUT_W-1:0]\n"
         "                    : (shifted < OUT_MIN) ? OUT_MIN[OUT_W-1:0]\n"
         "                    : shifted[OUT_W-1:0];\n"
         "endmodule\n";
    return v.str();
}

inline std::string emit_arbiter() {
    return
        "// Fixed-priority access to the shared convolution engine: the\n"
        "// lowest-index requester wins; the holder keeps the grant until\n"
        "// release_grant.\n"
        "module arbiter #(\n"
        "    parameter integer N_CLIENTS = 4\n"
        ") (\n"
        "    input  wire                 clk,\n"
        "    input  wire                 rst,\n"
        "    input  wire [N_CLIENTS-1:0] req,\n"
        "    input  wire                 release_grant,\n"
        "    output wire [N_CLIENTS-1:0] grant\n"
        ");\n"
        "    reg  [N_CLIENTS-1:0] hold;\n"
        "    wire [N_CLIENTS-1:0] above;\n"
        "    wire busy = |hold;\n"
        "\n"
        "    assign above[0] = 1'b0;\n"
        "    genvar g;\n"
        "    generate\n"
        "        for (g = 1; g < N_CLIENTS; g = g + 1) begin : prio\n"
        "            assign above[g] = above[g-1] | req[g-1];\n"
        "        end\n"
        "    endgenerate\n"
        "\n"
        "    assign grant = busy ? hold : (req & ~above);\n"
        "\n"
        "    always @(posedge clk) begin\n"
        "        if (rst) hold <= {N_CLIENTS{1'b0}};\n"
        "        else if (!busy) hold <= req & ~above;\n"
        "        else if (release_grant) hold <= {N_CLIENTS{1'b0}};\n"
        "    end\n"
        "\n"
        "    // synthesis translate_off\n"
        "    always @(posedge clk) begin\n"
        "        if (!$onehot0(grant)) $fatal(1, \"arbiter grant not "
        "one-hot\");\n"
        "    end\n"
        "    // synthesis translate_on\n"
        "endmodule\n";
}

// ---------------------------------------------------------------------------
// Top-level assembly

struct EmitPlan {
    NetworkSpec spec;
    QPlan qplan;
    QuantizedWeights weights;
    DeviceSpec device;
    HardwareConfig config;
};

namespace detail {

// Fraction-width delta applied after layer l, matching the datapath's
// requantize step for that layer.
inline int stage_shift(const NetworkSpec& spec, const QPlan& plan, int l) {
    const QFormat in_q =
        l == 0 ? plan.input_format : plan.activation_formats[l - 1];
    const QFormat out_q = plan.activation_formats[l];
    if (spec.layers[l].parameterized())
        return in_q.frac_bits + plan.weight_formats[l]->frac_bits -
               out_q.frac_bits;
    return in_q.frac_bits - out_q.frac_bits;
}

// Width the adjust instance computes in: enough headroom that rounding
// or widening never wraps before the final clamp.
inline int adjust_in_width(int base_w, int shift) {
    return base_w + 2 + std::max(0, -shift);
}

inline std::string sign_extend(const std::string& name, int from_w,
                               int to_w) {
    if (to_w == from_w) return name;
    return strf("{{%d{%s[%d]}}, %s}", to_w - from_w, name.c_str(), from_w - 1,
                name.c_str());
}

} // namespace detail

inline std::string emit_top(const EmitPlan& plan) {
    const NetworkSpec& spec = plan.spec;
    const QPlan& qp = plan.qplan;
    const int width = qp.width;
    const int acc_w = acc_budget_bits(width);
    const std::vector<int> convs = spec.conv_layers();
    const int n_conv = static_cast<int>(convs.size());
    const bool shared = plan.config.mode == ConvMode::Shared && n_conv > 0;
    const int L = static_cast<int>(spec.layers.size());

    std::ostringstream v;
    v << "// Generated network top: one stage per layer, each stage ending "
         "in a\n"
         "// precision_adjust that realizes the quantization plan.\n"
         "module top #(\n";
    v << detail::strf("    parameter integer WIDTH = %d\n", width);
    v << ") (\n"
         "    input  wire                    clk,\n"
         "    input  wire                    rst,\n"
         "    input  wire                    in_valid,\n"
         "    output wire                    in_ready,\n"
         "    input  wire signed [WIDTH-1:0] in_data,\n"
         "    output wire                    out_valid,\n"
         "    output wire signed [WIDTH-1:0] out_data,\n"
         "    output wire                    sat_any\n"
         ");\n";

    // stage output wires
    for (int l = 0; l < L; ++l) {
        v << detail::strf(
            "    wire s%d_valid;\n    wire signed [WIDTH-1:0] s%d_data;\n", l,
            l);
    }
    v << "\n";

    if (spec.layers[0].kind != LayerKind::Conv2d)
        v << "    assign in_ready = 1'b1;\n\n";

    std::vector<std::string> sat_terms;

    // shared-engine plumbing is declared up front, clients hook in per stage
    if (shared) {
        v << detail::strf(
            "    // shared convolution engine, %d clients\n"
            "    wire [%d:0] arb_req;\n"
            "    wire [%d:0] arb_grant;\n",
            n_conv, n_conv - 1, n_conv - 1);
        v << "    wire conv_release;\n"
             "    wire sh_win_valid;\n"
             "    wire sh_win_ready;\n"
             "    wire [9*WIDTH-1:0] sh_win;\n"
             "    wire [9*WIDTH-1:0] sh_filt;\n"
             "    wire sh_clear;\n";
        v << detail::strf("    wire signed [%d:0] sh_bias;\n", acc_w - 1);
        v << detail::strf("    wire c_valid;\n    wire signed [%d:0] c_acc;\n",
                          acc_w - 1);
        v << detail::strf(
            "    arbiter #(.N_CLIENTS(%d)) u_arbiter (\n"
            "        .clk(clk), .rst(rst), .req(arb_req),\n"
            "        .release_grant(conv_release), .grant(arb_grant)\n"
            "    );\n",
            n_conv);
        v << detail::strf(
            "    conv_unit #(.WIDTH(WIDTH), .LANES(%d), .ACC_W(%d)) "
            "u_conv_shared (\n"
            "        .clk(clk), .rst(rst), .acc_clear(sh_clear),\n"
            "        .bias_acc(sh_bias),\n"
            "        .win_valid(sh_win_valid), .win_ready(sh_win_ready),\n"
            "        .win_data(sh_win), .filt_data(sh_filt),\n"
            "        .out_valid(c_valid), .out_acc(c_acc)\n"
            "    );\n\n",
            plan.config.conv_dsp(0, n_conv), acc_w);
    }

    int conv_seen = 0;
    for (int l = 0; l < L; ++l) {
        const LayerSpec& ls = spec.layers[l];
        const TensorShape in = spec.per_layer_shapes[l].in;
        const TensorShape out = spec.per_layer_shapes[l].out;
        const std::string uv = l == 0 ? "in_valid" : detail::strf("s%d_valid", l - 1);
        const std::string ud = l == 0 ? "in_data" : detail::strf("s%d_data", l - 1);
        const int shift = detail::stage_shift(spec, qp, l);

        v << detail::strf("    // stage %d: %s %dx%dx%d -> %dx%dx%d\n", l,
                          layer_kind_name(ls.kind), in.height, in.width,
                          in.channels, out.height, out.width, out.channels);

        auto emit_adjust = [&](const std::string& src, int base_w,
                               const std::string& dst) {
            const int in_w = detail::adjust_in_width(base_w, shift);
            const std::string sat = detail::strf("adj%d_sat", l);
            sat_terms.push_back(sat);
            v << detail::strf("    wire %s;\n", sat.c_str());
            v << detail::strf("    wire signed [%d:0] adj%d_in = %s;\n",
                              in_w - 1, l,
                              detail::sign_extend(src, base_w, in_w).c_str());
            v << detail::strf(
                "    precision_adjust #(.IN_W(%d), .SHIFT(%d)) u_adj_l%d (\n"
                "        .in_data(adj%d_in), .out_data(%s), .sat_flag(%s)\n"
                "    );\n",
                in_w, shift, l, l, dst.c_str(), sat.c_str());
        };

        switch (ls.kind) {
        case LayerKind::Conv2d: {
            const int k = conv_seen++;
            v << detail::strf(
                "    wire ff%d_win_valid, ff%d_win_ready, ff%d_row;\n"
                "    wire [9*WIDTH-1:0] ff%d_win, ff%d_filt;\n"
                "    wire signed [WIDTH-1:0] ff%d_bias;\n",
                l, l, l, l, l, l);
            const std::string ready_port =
                l == 0 ? "in_ready" : detail::strf("ff%d_in_ready", l);
            if (l != 0) v << detail::strf("    wire %s;\n", ready_port.c_str());
            v << detail::strf(
                "    feedforward_l%d #(.WIDTH(WIDTH)) u_ff_l%d (\n"
                "        .clk(clk), .rst(rst),\n"
                "        .in_valid(%s), .in_ready(%s), .in_data(%s),\n"
                "        .win_ready(ff%d_win_ready), .win_valid(ff%d_win_valid),\n"
                "        .win_data(ff%d_win), .filt_data(ff%d_filt),\n"
                "        .bias_data(ff%d_bias), .row_done(ff%d_row)\n"
                "    );\n",
                l, l, uv.c_str(), ready_port.c_str(), ud.c_str(), l, l, l, l,
                l, l);
            // bias enters the accumulator shifted up by the input fraction
            const int bshift = l == 0 ? qp.input_format.frac_bits
                                      : qp.activation_formats[l - 1].frac_bits;
            v << detail::strf(
                "    wire signed [%d:0] b%d_acc = %s <<< %d;\n", acc_w - 1, l,
                detail::sign_extend(detail::strf("ff%d_bias", l), width, acc_w)
                    .c_str(),
                bshift);
            std::string acc_src;
            if (shared) {
                v << detail::strf(
                    "    assign arb_req[%d] = ff%d_win_valid;\n"
                    "    assign ff%d_win_ready = sh_win_ready & "
                    "arb_grant[%d];\n",
                    k, l, l, k);
                acc_src = "c_acc";
                v << detail::strf("    wire c%d_valid = c_valid & "
                                  "arb_grant[%d];\n",
                                  l, k);
            } else {
                const int lanes = plan.config.conv_dsp(k, n_conv);
                v << detail::strf("    wire c%d_valid;\n", l);
                v << detail::strf("    wire signed [%d:0] c%d_acc;\n",
                                  acc_w - 1, l);
                v << detail::strf(
                    "    conv_unit #(.WIDTH(WIDTH), .LANES(%d), .ACC_W(%d)) "
                    "u_conv_l%d (\n"
                    "        .clk(clk), .rst(rst), .acc_clear(ff%d_row),\n"
                    "        .bias_acc(b%d_acc),\n"
                    "        .win_valid(ff%d_win_valid), "
                    ".win_ready(ff%d_win_ready),\n"
                    "        .win_data(ff%d_win), .filt_data(ff%d_filt),\n"
                    "        .out_valid(c%d_valid), .out_acc(c%d_acc)\n"
                    "    );\n",
                    lanes, acc_w, l, l, l, l, l, l, l, l, l);
                acc_src = detail::strf("c%d_acc", l);
            }
            emit_adjust(acc_src, acc_w, detail::strf("s%d_data", l));
            v << detail::strf("    assign s%d_valid = c%d_valid;\n", l, l);
            break;
        }
        case LayerKind::Dense: {
            const int lanes = plan.config.dsp_dense;
            v << detail::strf(
                "    wire df%d_pair_valid, df%d_pair_ready, df%d_start, "
                "df%d_last;\n"
                "    wire [%d:0] df%d_a, df%d_w;\n"
                "    wire signed [WIDTH-1:0] df%d_bias;\n"
                "    wire df%d_in_ready;\n",
                l, l, l, l, lanes * width - 1, l, l, l, l);
            v << detail::strf(
                "    dense_feed_l%d #(.WIDTH(WIDTH), .LANES(%d)) u_dfeed_l%d "
                "(\n"
                "        .clk(clk), .rst(rst),\n"
                "        .in_valid(%s), .in_ready(df%d_in_ready), "
                ".in_data(%s),\n"
                "        .pair_ready(df%d_pair_ready), "
                ".pair_valid(df%d_pair_valid),\n"
                "        .vec_start(df%d_start), .vec_last(df%d_last),\n"
                "        .a_data(df%d_a), .w_data(df%d_w), "
                ".bias_data(df%d_bias)\n"
                "    );\n",
                l, lanes, l, uv.c_str(), l, ud.c_str(), l, l, l, l, l, l, l);
            const int bshift = qp.activation_formats[l - 1].frac_bits;
            v << detail::strf(
                "    wire signed [%d:0] b%d_acc = %s <<< %d;\n", acc_w - 1, l,
                detail::sign_extend(detail::strf("df%d_bias", l), width,
                                    acc_w)
                    .c_str(),
                bshift);
            v << detail::strf("    wire d%d_valid;\n", l);
            v << detail::strf("    wire signed [%d:0] d%d_acc;\n", acc_w - 1,
                              l);
            v << detail::strf(
                "    dense_unit #(.WIDTH(WIDTH), .LANES(%d), .ACC_W(%d)) "
                "u_dense_l%d (\n"
                "        .clk(clk), .rst(rst),\n"
                "        .vec_start(df%d_start), .bias_acc(b%d_acc),\n"
                "        .pair_valid(df%d_pair_valid), "
                ".pair_ready(df%d_pair_ready),\n"
                "        .a_data(df%d_a), .w_data(df%d_w), "
                ".vec_last(df%d_last),\n"
                "        .out_valid(d%d_valid), .out_acc(d%d_acc)\n"
                "    );\n",
                lanes, acc_w, l, l, l, l, l, l, l, l, l, l);
            emit_adjust(detail::strf("d%d_acc", l), acc_w,
                        detail::strf("s%d_data", l));
            v << detail::strf("    assign s%d_valid = d%d_valid;\n", l, l);
            break;
        }
        case LayerKind::Relu: {
            v << detail::strf(
                "    wire r%d_valid;\n    wire signed [WIDTH-1:0] r%d_data;\n",
                l, l);
            v << detail::strf(
                "    relu_unit #(.WIDTH(WIDTH)) u_relu_l%d (\n"
                "        .in_valid(%s), .in_data(%s),\n"
                "        .out_valid(r%d_valid), .out_data(r%d_data)\n"
                "    );\n",
                l, uv.c_str(), ud.c_str(), l, l);
            emit_adjust(detail::strf("r%d_data", l), width,
                        detail::strf("s%d_data", l));
            v << detail::strf("    assign s%d_valid = r%d_valid;\n", l, l);
            break;
        }
        case LayerKind::MaxPool: {
            v << detail::strf(
                "    wire p%d_valid;\n    wire signed [WIDTH-1:0] p%d_data;\n",
                l, l);
            v << detail::strf(
                "    maxpool_unit_m%d #(.WIDTH(WIDTH)) u_pool_l%d (\n"
                "        .clk(clk), .rst(rst),\n"
                "        .in_valid(%s), .in_data(%s),\n"
                "        .out_valid(p%d_valid), .out_data(p%d_data)\n"
                "    );\n",
                ls.pool_size, l, uv.c_str(), ud.c_str(), l, l);
            emit_adjust(detail::strf("p%d_data", l), width,
                        detail::strf("s%d_data", l));
            v << detail::strf("    assign s%d_valid = p%d_valid;\n", l, l);
            break;
        }
        case LayerKind::Flatten: {
            v << "    // reshape only; the adjust realizes any fraction "
                 "change\n";
            emit_adjust(ud, width, detail::strf("s%d_data", l));
            v << detail::strf("    assign s%d_valid = %s;\n", l, uv.c_str());
            break;
        }
        }
        v << "\n";
    }

    if (shared) {
        // the shared engine's request-side muxes, lowest client first
        auto mux = [&](const char* field) {
            std::string expr;
            for (int k = 0; k < n_conv; ++k) {
                const int l = convs[k];
                if (k + 1 < n_conv)
                    expr += detail::strf("arb_grant[%d] ? ff%d_%s :\n"
                                         "                  ",
                                         k, l, field);
                else
                    expr += detail::strf("ff%d_%s", l, field);
            }
            return expr;
        };
        v << "    // shared-engine input muxes\n";
        v << detail::strf("    assign sh_win_valid = |(arb_grant & "
                          "arb_req);\n");
        v << detail::strf("    assign sh_win  = %s;\n",
                          mux("win").c_str());
        v << detail::strf("    assign sh_filt = %s;\n", mux("filt").c_str());
        std::string bias_expr;
        for (int k = 0; k < n_conv; ++k) {
            const int l = convs[k];
            if (k + 1 < n_conv)
                bias_expr += detail::strf("arb_grant[%d] ? b%d_acc :\n"
                                          "                  ",
                                          k, l);
            else
                bias_expr += detail::strf("b%d_acc", l);
        }
        v << detail::strf("    assign sh_bias = %s;\n", bias_expr.c_str());
        v << detail::strf("    assign sh_clear = %s;\n", mux("row").c_str());
        v << "    assign conv_release = sh_clear;\n\n";
    }

    v << detail::strf("    assign out_valid = s%d_valid;\n", L - 1);
    v << detail::strf("    assign out_data  = s%d_data;\n", L - 1);
    std::string sat_expr;
    for (std::size_t i = 0; i < sat_terms.size(); ++i) {
        if (i) sat_expr += " | ";
        sat_expr += sat_terms[i];
    }
    v << detail::strf("    assign sat_any = %s;\n", sat_expr.c_str());
    v << "endmodule\n";
    return v.str();
}

// ---------------------------------------------------------------------------
// Whole-design emission

struct EmittedFile {
    std::string path;
    std::string content;
    std::string sha256;
};

struct EmitResult {
    std::vector<EmittedFile> files;  // sorted by path; manifest appended last
    nlohmann::json manifest;
    FitResult fit;
};

inline EmitResult render_emit(const EmitPlan& plan) {
    const NetworkSpec& spec = plan.spec;
    if (!spec.shapes_inferred())
        throw Error("render_emit: shapes not inferred");
    plan.qplan.validate(spec);
    plan.config.validate(static_cast<int>(spec.conv_layers().size()));
    const int width = plan.qplan.width;

    FitResult fit = check_fit(spec, plan.device, width, plan.config);
    if (!fit.fits)
        throw Error("render_emit: design does not fit the device (" +
                    fit.binding + " bound), refusing to emit");

    const std::vector<int> convs = spec.conv_layers();
    const int n_conv = static_cast<int>(convs.size());
    const bool shared = plan.config.mode == ConvMode::Shared && n_conv > 0;

    std::vector<EmittedFile> files;
    auto add = [&](std::string path, std::string content) {
        files.push_back({std::move(path), std::move(content), ""});
    };

    add("top.v", emit_top(plan));
    add("units/precision_adjust.v", emit_precision_adjust(width));
    if (n_conv > 0) {
        add("units/conv_unit.v",
            emit_conv_unit(plan.config.conv_dsp(0, n_conv), width));
        if (shared) add("units/arbiter.v", emit_arbiter());
        for (int l : convs)
            add(detail::strf("units/feedforward_l%d.v", l),
                emit_feedforward(spec, l, width));
    }
    bool any_relu = false;
    std::set<int> pool_sizes;
    bool any_dense = false;
    for (std::size_t l = 0; l < spec.layers.size(); ++l) {
        const LayerSpec& ls = spec.layers[l];
        if (ls.kind == LayerKind::Relu) any_relu = true;
        if (ls.kind == LayerKind::MaxPool) pool_sizes.insert(ls.pool_size);
        if (ls.kind == LayerKind::Dense) {
            any_dense = true;
            add(detail::strf("units/dense_feed_l%d.v",
                             static_cast<int>(l)),
                emit_dense_feed(spec, static_cast<int>(l),
                                plan.config.dsp_dense, width));
        }
    }
    if (any_relu) add("units/relu_unit.v", emit_relu_unit(width));
    for (int m : pool_sizes)
        add(detail::strf("units/maxpool_unit_m%d.v", m),
            emit_maxpool_unit(m, width));
    if (any_dense)
        add("units/dense_unit.v",
            emit_dense_unit(plan.config.dsp_dense, width));

    // weight memfiles carry the same raws the datapath simulation uses
    for (int l : spec.parameterized_layers()) {
        std::vector<std::int32_t> raws = plan.weights.weights[l];
        raws.insert(raws.end(), plan.weights.biases[l].begin(),
                    plan.weights.biases[l].end());
        add(detail::strf("weights/layer%d.mem", l),
            emit_memfile(raws, width));
    }

    std::sort(files.begin(), files.end(),
              [](const EmittedFile& a, const EmittedFile& b) {
                  return a.path < b.path;
              });

    nlohmann::json manifest;
    manifest["files"] = nlohmann::json::array();
    for (auto& f : files) {
        f.sha256 = detail::sha256_hex(f.content);
        manifest["files"].push_back({{"path", f.path}, {"sha256", f.sha256}});
    }
    manifest["qplan"] = qplan_to_json(plan.qplan);
    manifest["config"] = {
        {"mode", conv_mode_name(plan.config.mode)},
        {"width", width},
        {"dsp_per_conv", plan.config.dsp_per_conv},
        {"dsp_dense", plan.config.dsp_dense},
        {"clock_mhz", plan.config.clock_mhz},
        {"double_buffer", plan.config.double_buffer},
    };

    EmitResult result;
    result.files = std::move(files);
    result.manifest = manifest;
    result.fit = fit;
    result.files.push_back(
        {"emit_manifest.json", manifest.dump(2) + "\n", ""});
    result.files.back().sha256 =
        detail::sha256_hex(result.files.back().content);
    return result;
}

// ---------------------------------------------------------------------------
// Structural lint: cheap sanity on the emitted text, not a parser.

inline void lint_verilog(const std::vector<EmittedFile>& files) {
    static const std::set<std::string> keywords = {
        "module",   "endmodule", "input",    "output",     "inout",
        "wire",     "reg",       "assign",   "always",     "initial",
        "begin",    "end",       "if",       "else",       "for",
        "generate", "endgenerate", "localparam", "parameter", "integer",
        "genvar",   "case",      "endcase",  "posedge",    "negedge",
        "signed",   "else if"};

    std::set<std::string> declared;
    std::set<std::string> paths;
    for (const auto& f : files) paths.insert(f.path);

    auto is_verilog = [](const std::string& p) {
        return p.size() > 2 && p.substr(p.size() - 2) == ".v";
    };

    for (const auto& f : files) {
        if (!is_verilog(f.path)) continue;
        std::istringstream in(f.content);
        std::string line;
        int modules = 0, ends = 0;
        while (std::getline(in, line)) {
            std::size_t p = line.find_first_not_of(' ');
            if (p == std::string::npos) continue;
            std::string body = line.substr(p);
            if (body.rfind("module ", 0) == 0) {
                ++modules;
                std::string name;
                for (std::size_t i = 7; i < body.size(); ++i) {
                    char c = body[i];
                    if (std::isalnum(static_cast<unsigned char>(c)) ||
                        c == '_')
                        name.push_back(c);
                    else
                        break;
                }
                if (!declared.insert(name).second)
                    throw Error("lint: module " + name + " declared twice");
            } else if (body.rfind("endmodule", 0) == 0) {
                ++ends;
            }
        }
        if (modules == 0)
            throw Error("lint: " + f.path + " declares no module");
        if (modules != ends)
            throw Error("lint: " + f.path +
                        " has unbalanced module/endmodule");
    }

    // second pass: instantiations reference declared modules, memfiles exist
    for (const auto& f : files) {
        if (!is_verilog(f.path)) continue;
        std::istringstream in(f.content);
        std::string line;
        while (std::getline(in, line)) {
            std::size_t p = line.find_first_not_of(' ');
            if (p == std::string::npos) continue;
            std::string body = line.substr(p);

            std::size_t rm = body.find("$readmemh(\"");
            if (rm != std::string::npos) {
                std::size_t start = rm + 11;
                std::size_t stop = body.find('"', start);
                std::string path = body.substr(start, stop - start);
                if (!paths.count(path))
                    throw Error("lint: " + f.path + " reads missing file " +
                                path);
            }

            // instantiation shapes: "<mod> #(" or "<mod> u_<inst> ("
            std::string first;
            std::size_t i = 0;
            while (i < body.size() &&
                   (std::isalnum(static_cast<unsigned char>(body[i])) ||
                    body[i] == '_'))
                first.push_back(body[i++]);
            if (first.empty() || keywords.count(first)) continue;
            std::string rest = body.substr(i);
            bool inst = rest.rfind(" #(", 0) == 0 ||
                        rest.rfind(" u_", 0) == 0;
            if (inst && !declared.count(first))
                throw Error("lint: " + f.path + " instantiates missing " +
                            first);
        }
    }
}

inline EmitResult emit_all(const EmitPlan& plan,
                           const std::filesystem::path& out_dir) {
    EmitResult result = render_emit(plan);
    lint_verilog(result.files);
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    for (const auto& f : result.files) {
        std::filesystem::path target = out_dir / f.path;
        std::filesystem::create_directories(target.parent_path(), ec);
        std::ofstream os(target, std::ios::binary);
        if (!os) throw IoError("emit_all: cannot write " + target.string());
        os.write(f.content.data(),
                 static_cast<std::streamsize>(f.content.size()));
        if (!os) throw IoError("emit_all: short write on " + target.string());
    }
    return result;
}

} // namespace tinycnn
