#include "cct/contact_log.hpp"

#include "cct/error.hpp"

namespace cct::contact_log {

ContactLog ContactLog::from_tuples(std::span<const ContactTuple> tuples,
                                   std::uint64_t retention_intervals)
{
    ContactLog log(retention_intervals);
    for (const auto& t : tuples) {
        log.record_contact(t.sent, t.received, t.interval);
    }
    return log;
}

void ContactLog::record_contact(const RandomIdentifier& sent, const RandomIdentifier& received,
                                IntervalIndex interval)
{
    if (sent == received) {
        throw Error("self-contact");
    }
    tuples_.insert(ContactTuple{sent, received, interval});
}

void ContactLog::prune_expired(IntervalIndex current)
{
    if (current.value < retention_) {
        return;
    }
    IntervalIndex oldest{current.value - retention_};
    // The set is ordered by interval first, so expired tuples form a prefix.
    tuples_.erase(tuples_.begin(),
                  tuples_.lower_bound(ContactTuple{RandomIdentifier{}, RandomIdentifier{}, oldest}));
}

std::vector<ContactTuple> ContactLog::export_tuples() const
{
    return {tuples_.begin(), tuples_.end()};
}

} // namespace cct::contact_log
