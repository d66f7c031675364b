#include <gtest/gtest.h>

#include "cct/bytes.hpp"
#include "cct/error.hpp"

using namespace cct;

TEST(Bytes, HexRoundTrip)
{
    Bytes data{0x00, 0x01, 0xab, 0xff};
    EXPECT_EQ(to_hex(data), "0001abff");
    EXPECT_EQ(from_hex("0001abff"), data);
}

TEST(Bytes, RejectsUppercaseAndOddHex)
{
    EXPECT_THROW(from_hex("ABCD"), Error);
    EXPECT_THROW(from_hex("abc"), Error);
    EXPECT_THROW(from_hex("zz"), Error);
}

TEST(Bytes, FixedBytesLengthChecked)
{
    EXPECT_THROW(FixedBytes<4>::from_hex_string("0011"), Error);
    EXPECT_EQ(FixedBytes<2>::from_hex_string("0a0b").hex(), "0a0b");
}

TEST(Bytes, BigEndianAppend)
{
    Bytes out;
    append_u64_be(out, 0x0102030405060708ULL);
    EXPECT_EQ(to_hex(out), "0102030405060708");
}

TEST(Bytes, CountOccurrencesOverlapping)
{
    Bytes hay{1, 1, 1, 2};
    Bytes needle{1, 1};
    EXPECT_EQ(count_occurrences(hay, needle), 2u);
    EXPECT_EQ(count_occurrences(hay, Bytes{}), 0u);
    EXPECT_EQ(count_occurrences(Bytes{}, needle), 0u);
}
