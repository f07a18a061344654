#include "physec/trace.hpp"

#include "physec/atomic_file.hpp"
#include "physec/error.hpp"
#include "physec/format.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <utility>

namespace physec {

namespace {

std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return fields;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

template <typename T>
T parse_number(std::string_view text, std::string_view what, std::size_t line) {
    text = trim(text);
    T value{};
    const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size())
        throw ParseError("invalid " + std::string(what) + " '" + std::string(text) + "'", line);
    return value;
}

MessageRecord make_record(Sender sender, std::size_t block, std::size_t msg,
                          std::vector<double> gains, std::size_t line) {
    MessageRecord rec;
    rec.true_sender = sender;
    rec.block_index = block;
    rec.msg_index = msg;
    rec.estimate.gains = std::move(gains);
    rec.estimate.carrier_indices.resize(rec.estimate.gains.size());
    for (std::size_t i = 0; i < rec.estimate.gains.size(); ++i) rec.estimate.carrier_indices[i] = i;
    try {
        validate(rec.estimate);
    } catch (const ContractError& e) {
        throw ParseError(e.what(), line);
    }
    return rec;
}

class RecordChecker {
public:
    void check(const MessageRecord& rec, std::size_t line) {
        if (dim_ == 0) {
            dim_ = rec.estimate.size();
        } else if (rec.estimate.size() != dim_) {
            throw ParseError("inconsistent estimate length " + std::to_string(rec.estimate.size()) +
                                 ", expected " + std::to_string(dim_),
                             line);
        }
        if (!seen_.emplace(rec.block_index, rec.msg_index).second)
            throw ParseError("duplicate msg_index " + std::to_string(rec.msg_index) + " in block " +
                                 std::to_string(rec.block_index),
                             line);
    }

private:
    std::size_t dim_ = 0;
    std::set<std::pair<std::size_t, std::size_t>> seen_;
};

std::vector<MessageRecord> read_csv(std::istream& in) {
    std::vector<MessageRecord> records;
    std::string line;
    std::size_t lineno = 0;
    std::size_t dim = 0;
    bool header_seen = false;
    RecordChecker checker;

    while (std::getline(in, line)) {
        ++lineno;
        const auto text = trim(line);
        if (text.empty()) continue;
        const auto fields = split_commas(text);
        if (!header_seen) {
            if (fields.size() < 4 || trim(fields[0]) != "true_sender" || trim(fields[1]) != "block_index" ||
                trim(fields[2]) != "msg_index")
                throw ParseError("expected header 'true_sender,block_index,msg_index,g_0,...'", lineno);
            dim = fields.size() - 3;
            for (std::size_t i = 0; i < dim; ++i)
                if (trim(fields[3 + i]) != "g_" + std::to_string(i))
                    throw ParseError("header column " + std::to_string(3 + i) + " should be g_" +
                                         std::to_string(i),
                                     lineno);
            header_seen = true;
            continue;
        }
        if (fields.size() != dim + 3)
            throw ParseError("expected " + std::to_string(dim + 3) + " fields, found " +
                                 std::to_string(fields.size()),
                             lineno);
        Sender sender;
        try {
            sender = parse_sender(trim(fields[0]));
        } catch (const ContractError& e) {
            throw ParseError(e.what(), lineno);
        }
        const auto block = parse_number<std::size_t>(fields[1], "block_index", lineno);
        const auto msg = parse_number<std::size_t>(fields[2], "msg_index", lineno);
        std::vector<double> gains(dim);
        for (std::size_t i = 0; i < dim; ++i)
            gains[i] = parse_number<double>(fields[3 + i], "gain g_" + std::to_string(i), lineno);
        auto rec = make_record(sender, block, msg, std::move(gains), lineno);
        checker.check(rec, lineno);
        records.push_back(std::move(rec));
    }
    return records;
}

std::vector<MessageRecord> read_jsonl(std::istream& in) {
    std::vector<MessageRecord> records;
    std::string line;
    std::size_t lineno = 0;
    RecordChecker checker;

    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(std::string("invalid JSON: ") + e.what(), lineno);
        }
        Sender sender;
        std::size_t block = 0;
        std::size_t msg = 0;
        std::vector<double> gains;
        const char* key = "true_sender";
        try {
            sender = parse_sender(j.at(key).get<std::string>());
            key = "block_index";
            block = j.at(key).get<std::size_t>();
            key = "msg_index";
            msg = j.at(key).get<std::size_t>();
            key = "gains";
            gains = j.at(key).get<std::vector<double>>();
        } catch (const nlohmann::json::exception&) {
            throw ParseError(std::string("missing or invalid field '") + key + "'", lineno);
        } catch (const ContractError& e) {
            throw ParseError(e.what(), lineno);
        }
        auto rec = make_record(sender, block, msg, std::move(gains), lineno);
        checker.check(rec, lineno);
        records.push_back(std::move(rec));
    }
    return records;
}

}  // namespace

char sender_code(Sender s) noexcept { return s == Sender::Bob ? 'B' : 'E'; }

Sender parse_sender(std::string_view code) {
    if (code == "B") return Sender::Bob;
    if (code == "E") return Sender::Eve;
    throw ContractError("unknown sender '" + std::string(code) + "', expected B or E");
}

TraceFormat trace_format_for(const std::filesystem::path& path) {
    const auto ext = path.extension().string();
    return (ext == ".jsonl" || ext == ".json") ? TraceFormat::jsonl : TraceFormat::csv;
}

std::vector<MessageRecord> read_trace(std::istream& in, TraceFormat format) {
    return format == TraceFormat::csv ? read_csv(in) : read_jsonl(in);
}

void write_trace(std::ostream& out, std::span<const MessageRecord> records, TraceFormat format) {
    const std::size_t dim = records.empty() ? 0 : records.front().estimate.size();
    for (const auto& rec : records) {
        validate(rec.estimate);
        if (rec.estimate.size() != dim) throw ContractError("trace records must share one estimate length");
    }

    if (format == TraceFormat::csv) {
        out << "true_sender,block_index,msg_index";
        for (std::size_t i = 0; i < dim; ++i) out << ",g_" << i;
        out << '\n';
        for (const auto& rec : records) {
            out << sender_code(rec.true_sender) << ',' << rec.block_index << ',' << rec.msg_index;
            for (double g : rec.estimate.gains) out << ',' << format_double(g);
            out << '\n';
        }
        return;
    }

    for (const auto& rec : records) {
        out << "{\"true_sender\":\"" << sender_code(rec.true_sender) << "\",\"block_index\":" << rec.block_index
            << ",\"msg_index\":" << rec.msg_index << ",\"gains\":[";
        for (std::size_t i = 0; i < rec.estimate.gains.size(); ++i) {
            if (i) out << ',';
            out << format_double(rec.estimate.gains[i]);
        }
        out << "]}\n";
    }
}

std::vector<MessageRecord> load_trace(const std::filesystem::path& path, TraceFormat format) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open trace " + path.string());
    return read_trace(in, format);
}

void save_trace(const std::filesystem::path& path, std::span<const MessageRecord> records,
                TraceFormat format) {
    AtomicFileWriter writer(path);
    write_trace(writer.stream(), records, format);
    writer.commit();
}

}  // namespace physec
