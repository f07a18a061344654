#include "physec/atomic_file.hpp"

#include "physec/error.hpp"

#include <fstream>
#include <system_error>

namespace physec {

namespace fs = std::filesystem;

namespace {

fs::path temp_for(const fs::path& target) {
    fs::path tmp = target;
    tmp += ".partial";
    return tmp;
}

void rename_into_place(const fs::path& from, const fs::path& to) {
    std::error_code ec;
    fs::rename(from, to, ec);
    if (ec) {
        fs::remove(from, ec);
        throw IoError("cannot move " + from.string() + " to " + to.string());
    }
}

}  // namespace

void write_file_atomic(const fs::path& path, const std::string& content) {
    AtomicFileWriter writer(path);
    writer.stream() << content;
    writer.commit();
}

struct AtomicFileWriter::Impl {
    std::ofstream out;
};

AtomicFileWriter::AtomicFileWriter(fs::path target)
    : target_(std::move(target)), temp_(temp_for(target_)), impl_(std::make_unique<Impl>()) {
    if (target_.has_parent_path() && !fs::exists(target_.parent_path()))
        throw IoError("output directory does not exist: " + target_.parent_path().string());
    impl_->out.open(temp_, std::ios::binary | std::ios::trunc);
    if (!impl_->out) throw IoError("cannot open " + temp_.string() + " for writing");
}

AtomicFileWriter::~AtomicFileWriter() {
    if (!committed_) {
        impl_->out.close();
        std::error_code ec;
        fs::remove(temp_, ec);
    }
}

std::ostream& AtomicFileWriter::stream() { return impl_->out; }

void AtomicFileWriter::commit() {
    impl_->out.flush();
    if (!impl_->out) throw IoError("write failed for " + temp_.string());
    impl_->out.close();
    rename_into_place(temp_, target_);
    committed_ = true;
}

OutputBatch::~OutputBatch() {
    if (committed_) return;
    std::error_code ec;
    for (const auto& [tmp, target] : staged_) fs::remove(tmp, ec);
}

void OutputBatch::add(fs::path path, std::string content) {
    const fs::path tmp = temp_for(path);
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    staged_.emplace_back(tmp, std::move(path));
    out << content;
    out.flush();
    if (!out) throw IoError("write failed for " + tmp.string());
}

std::vector<fs::path> OutputBatch::commit() {
    std::vector<fs::path> published;
    for (const auto& [tmp, target] : staged_) {
        rename_into_place(tmp, target);
        published.push_back(target);
    }
    committed_ = true;
    return published;
}

}  // namespace physec
