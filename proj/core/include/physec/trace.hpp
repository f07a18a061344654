#pragma once

#include "physec/channel.hpp"

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

namespace physec {

// CSV:   true_sender,block_index,msg_index,g_0,...,g_{M-1}   (sender is B or E)
// JSONL: {"true_sender":"B","block_index":0,"msg_index":0,"gains":[...]}
// Gains are written with 17 significant digits so they read back bit-exact.
// Loaded estimates carry carrier indices 0..M-1; the file does not record them.
enum class TraceFormat { csv, jsonl };

/// csv unless the extension is .jsonl or .json.
TraceFormat trace_format_for(const std::filesystem::path& path);

std::vector<MessageRecord> read_trace(std::istream& in, TraceFormat format);
void write_trace(std::ostream& out, std::span<const MessageRecord> records, TraceFormat format);

/// Throws IoError if the file cannot be opened, ParseError on malformed rows.
std::vector<MessageRecord> load_trace(const std::filesystem::path& path, TraceFormat format);

/// Atomic: the file either appears complete or not at all.
void save_trace(const std::filesystem::path& path, std::span<const MessageRecord> records,
                TraceFormat format);

char sender_code(Sender s) noexcept;
Sender parse_sender(std::string_view code);

}  // namespace physec
