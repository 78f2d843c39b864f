#include "doctest.h"

#include "spikelds/csvio.hpp"

#include <sstream>
#include <stdexcept>

namespace csv = spikelds::csv;

TEST_CASE("fields with separators or quotes are quoted and doubled")
{
    CHECK(csv::escape("plain") == "plain");
    CHECK(csv::escape("") == "");
    CHECK(csv::escape("a,b") == "\"a,b\"");
    CHECK(csv::escape("say \"hi\"") == "\"say \"\"hi\"\"\"");
    CHECK(csv::escape("line\nbreak") == "\"line\nbreak\"");
    CHECK(csv::escape("cr\rhere") == "\"cr\rhere\"");
}

TEST_CASE("doubles print as shortest round-trip decimals")
{
    CHECK(csv::format_double(0.1) == "0.1");
    CHECK(csv::format_double(1.0) == "1");
    CHECK(csv::format_double(-2.5) == "-2.5");
    CHECK(csv::format_double(1.0 / 3.0) == "0.3333333333333333");
    const double v = 1.2345678901234567e-12;
    CHECK(std::stod(csv::format_double(v)) == v);
}

TEST_CASE("write then read round-trips awkward fields")
{
    std::ostringstream os;
    csv::write_row(os, {"a", "b,c", "d\"e", "f\ng", ""});
    csv::write_row(os, {"1", "2"});

    std::istringstream is(os.str());
    const auto rows = csv::read(is);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0] == std::vector<std::string>{"a", "b,c", "d\"e", "f\ng", ""});
    CHECK(rows[1] == std::vector<std::string>{"1", "2"});
}

TEST_CASE("matrix rows stream one frame per line under a header")
{
    Eigen::MatrixXd m(2, 3);
    m << 1, 2, 3, 0.5, -1, 4;
    std::ostringstream os;
    csv::write_matrix(os, {"x", "y"}, m);
    CHECK(os.str() == "x,y\n1,0.5\n2,-1\n3,4\n");

    CHECK_THROWS_AS(csv::write_matrix(os, {"x"}, m), std::invalid_argument);
}

TEST_CASE("reader handles crlf and flags malformed quoting")
{
    std::istringstream crlf("a,b\r\nc,d\r\n");
    const auto rows = csv::read(crlf);
    REQUIRE(rows.size() == 2);
    CHECK(rows[1][1] == "d");

    std::istringstream bad("a,b\"c\n");
    CHECK_THROWS_AS(csv::read(bad), std::runtime_error);
    std::istringstream open_quote("\"unterminated\n");
    CHECK_THROWS_AS(csv::read(open_quote), std::runtime_error);
}

TEST_CASE("empty trailing fields survive the round trip")
{
    std::istringstream is("a,,c\n,,\n");
    const auto rows = csv::read(is);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0] == std::vector<std::string>{"a", "", "c"});
    CHECK(rows[1] == std::vector<std::string>{"", "", ""});
}
