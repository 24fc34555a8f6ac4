#include "qndsim/io.hpp"

#include <charconv>
#include <fstream>
#include <system_error>

#include "qndsim/errors.hpp"

namespace qndsim::io {

namespace {

std::ofstream open_for_write(const std::filesystem::path& path) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot open " + path.string() + " for writing");
    }
    return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
    out.flush();
    if (!out) {
        throw Error("write to " + path.string() + " failed");
    }
}

const char* basis_name(QubitBasis b) {
    switch (b) {
        case QubitBasis::X:
            return "X";
        case QubitBasis::Y:
            return "Y";
        case QubitBasis::Z:
            return "Z";
        default:
            return "none";
    }
}

}  // namespace

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
    auto out = open_for_write(path);
    for (std::size_t i = 0; i < header.size(); ++i) {
        out << (i ? "," : "") << header[i];
    }
    out << '\n';
    for (const auto& row : rows) {
        if (row.size() != header.size()) {
            throw InvalidArgument("CSV row width differs from the header");
        }
        for (std::size_t i = 0; i < row.size(); ++i) {
            out << (i ? "," : "") << format_double(row[i]);
        }
        out << '\n';
    }
    finish(out, path);
}

void write_matrix_csv(const std::filesystem::path& path, const ComplexMatrix& m) {
    auto out = open_for_write(path);
    out << "row,col,re,im\n";
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            out << r << ',' << c << ',' << format_double(m(r, c).real()) << ','
                << format_double(m(r, c).imag()) << '\n';
        }
    }
    finish(out, path);
}

void write_record_csv(const std::filesystem::path& path, const MeasurementRecord& record) {
    auto out = open_for_write(path);
    out << "setting,theta,basis,outcome,bin_center,count\n";
    for (std::size_t s = 0; s < record.settings.size(); ++s) {
        const auto& rec = record.settings[s];
        for (std::size_t j = 0; j < rec.counts.size(); ++j) {
            out << s << ',' << format_double(rec.theta) << ',' << basis_name(rec.basis) << ','
                << rec.qubit_outcome << ',' << format_double(record.grid.center(static_cast<int>(j)))
                << ',' << rec.counts[j] << '\n';
        }
    }
    finish(out, path);
}

void write_wigner_csv(const std::filesystem::path& path, const WignerGrid& grid) {
    auto out = open_for_write(path);
    out << "x,p,W\n";
    for (std::size_t i = 0; i < grid.x.size(); ++i) {
        for (std::size_t j = 0; j < grid.p.size(); ++j) {
            out << format_double(grid.x[i]) << ',' << format_double(grid.p[j]) << ','
                << format_double(grid.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)))
                << '\n';
        }
    }
    finish(out, path);
}

}  // namespace qndsim::io
