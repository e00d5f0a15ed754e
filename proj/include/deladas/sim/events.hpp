#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace deladas::sim {

using Tick = std::uint64_t;

/// One line of the simulator's event log. Sequence numbers make the order
/// total and reproducible within a tick.
struct Event {
    Tick time = 0;
    std::uint64_t seq = 0;
    std::string category;
    std::string subject;
    std::string detail;
};

class EventLog {
public:
    void append(Tick time, std::string category, std::string subject, std::string detail) {
        entries_.push_back({time, next_seq_++, std::move(category), std::move(subject),
                            std::move(detail)});
    }

    const std::vector<Event>& entries() const { return entries_; }

    /// Line-oriented rendering: "<t> <category> <subject> <detail>".
    std::string to_text() const {
        std::string out;
        for (const auto& e : entries_) {
            out += std::to_string(e.time);
            out += ' ';
            out += e.category;
            out += ' ';
            out += e.subject.empty() ? "-" : e.subject;
            if (!e.detail.empty()) {
                out += ' ';
                out += e.detail;
            }
            out += '\n';
        }
        return out;
    }

    std::size_t count(std::string_view category) const {
        std::size_t n = 0;
        for (const auto& e : entries_)
            if (e.category == category) ++n;
        return n;
    }

    bool contains(std::string_view category) const { return count(category) > 0; }

private:
    std::vector<Event> entries_;
    std::uint64_t next_seq_ = 0;
};

} // namespace deladas::sim
