#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace physec {

/// Writes `content` to a sibling temporary and renames it over `path` on success.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

/// Streams into a temporary file; the rename happens in commit().
/// Destroying an uncommitted writer removes the temporary.
class AtomicFileWriter {
public:
    explicit AtomicFileWriter(std::filesystem::path target);
    ~AtomicFileWriter();

    AtomicFileWriter(const AtomicFileWriter&) = delete;
    AtomicFileWriter& operator=(const AtomicFileWriter&) = delete;

    std::ostream& stream();
    void commit();

private:
    struct Impl;
    std::filesystem::path target_;
    std::filesystem::path temp_;
    std::unique_ptr<Impl> impl_;
    bool committed_ = false;
};

/// Collects several outputs and publishes them together: either every file is
/// renamed into place or the temporaries are discarded.
class OutputBatch {
public:
    OutputBatch() = default;
    ~OutputBatch();

    OutputBatch(const OutputBatch&) = delete;
    OutputBatch& operator=(const OutputBatch&) = delete;

    void add(std::filesystem::path path, std::string content);
    std::vector<std::filesystem::path> commit();

private:
    std::vector<std::pair<std::filesystem::path, std::filesystem::path>> staged_;
    bool committed_ = false;
};

}  // namespace physec
