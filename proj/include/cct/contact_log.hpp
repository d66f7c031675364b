#pragma once

#include <cstdint>
#include <set>
#include <span>
#include <vector>

#include "cct/ident.hpp"

namespace cct::contact_log {

using ident::IntervalIndex;
using ident::RandomIdentifier;

inline constexpr std::uint64_t kDefaultRetentionIntervals = 1344;

struct ContactTuple {
    RandomIdentifier sent;
    RandomIdentifier received;
    IntervalIndex interval;

    // Export order: interval, then sent bytes, then received bytes.
    friend auto operator<=>(const ContactTuple& a, const ContactTuple& b)
    {
        if (auto c = a.interval <=> b.interval; c != 0) return c;
        if (auto c = a.sent <=> b.sent; c != 0) return c;
        return a.received <=> b.received;
    }
    friend bool operator==(const ContactTuple&, const ContactTuple&) = default;
};

// Append-only set of contact tuples kept on a device. One writer at a time.
class ContactLog {
public:
    explicit ContactLog(std::uint64_t retention_intervals = kDefaultRetentionIntervals)
        : retention_(retention_intervals)
    {
    }

    static ContactLog from_tuples(std::span<const ContactTuple> tuples,
                                  std::uint64_t retention_intervals = kDefaultRetentionIntervals);

    // Re-recording an existing triple is a no-op. Throws "self-contact".
    void record_contact(const RandomIdentifier& sent, const RandomIdentifier& received,
                        IntervalIndex interval);

    // Drops every tuple whose interval is older than current - retention.
    void prune_expired(IntervalIndex current);

    std::vector<ContactTuple> export_tuples() const;

    std::size_t size() const { return tuples_.size(); }
    bool empty() const { return tuples_.empty(); }
    std::uint64_t retention_intervals() const { return retention_; }

    bool operator==(const ContactLog&) const = default;

private:
    std::set<ContactTuple> tuples_;
    std::uint64_t retention_;
};

} // namespace cct::contact_log
