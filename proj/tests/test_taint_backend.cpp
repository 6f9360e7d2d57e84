#include "support.hpp"

#include <gtest/gtest.h>

using namespace bt_test;

namespace {

SummaryResult run(const MethodIndex& idx, const std::string& sig, const SensitiveApi& root_api,
                  const std::string& prev = {}, bool sink_terminates = true)
{
    TaintBackend backend;
    DropLog drops;
    SummaryRequest req{*idx.find(sig), prev, root_api.data_type, root_api, sink_terminates};
    return backend.summarize(req, idx, drops);
}

const auto kLatitude = api("Landroid/location/Location;->getLatitude", "Location");
const auto kLastKnown = api("Landroid/location/LocationManager;->getLastKnownLocation", "Location");
const auto kPhone = api("Landroid/telephony/TelephonyManager;->getLine1Number", "Phone Number");
const std::string kLogD = "Landroid/util/Log;->d:(Ljava/lang/String;Ljava/lang/String;)I";

} // namespace

// getLatitude -> move-result-wide v0 -> String.valueOf -> v2 -> Log.d(v5, v2).
TEST(TaintBackend, LatitudeLoggedWithLogD)
{
    auto idx = load_app("location_log");
    auto r = run(idx, "Lcom/fx/locationlog/MainActivity;->report:(Landroid/location/Location;)V", kLatitude);
    ASSERT_EQ(r.sinks.size(), 1u);
    EXPECT_EQ(r.sinks[0].sink_ref.str(), kLogD);
    EXPECT_EQ(r.sinks[0].category, SinkCategory::Logging);
    EXPECT_EQ(r.sinks[0].evidence, "invoke-static {v5, v2}, Landroid/util/Log;->d(Ljava/lang/String;Ljava/lang/String;)I");
    EXPECT_TRUE(r.leak_here);
    EXPECT_TRUE(r.next_methods.empty());
    EXPECT_NE(r.summary.find("retrieved by calling getLatitude()"), std::string::npos) << r.summary;
}

TEST(TaintBackend, UnusedSensitiveResult)
{
    auto idx = index_from(R"(.class La/U;
.method static f(Landroid/location/Location;)V
    .locals 3
    invoke-virtual {p0}, Landroid/location/Location;->getLatitude()D
    const-string v0, "x"
    invoke-static {v0}, La/U;->g(Ljava/lang/String;)V
    invoke-static {v0, v0}, Landroid/util/Log;->d(Ljava/lang/String;Ljava/lang/String;)I
    return-void
.end method
.method static g(Ljava/lang/String;)V
    .locals 0
    return-void
.end method
)");
    auto r = run(idx, "La/U;->f:(Landroid/location/Location;)V", kLatitude);
    EXPECT_TRUE(r.next_methods.empty());
    EXPECT_TRUE(r.sinks.empty());
    EXPECT_FALSE(r.leak_here);
}

TEST(TaintBackend, NoSensitiveDataNoInvokes)
{
    auto idx = index_from(".class La/E;\n.method static f()I\n    .locals 1\n    const/4 v0, 0x1\n    return v0\n.end method\n");
    auto r = run(idx, "La/E;->f:()I", kLatitude);
    EXPECT_TRUE(r.next_methods.empty());
    EXPECT_TRUE(r.sinks.empty());
    EXPECT_FALSE(r.leak_here);
    EXPECT_EQ(r.summary, "Method does not originate, store, or pass sensitive Location data. No sink detected.");
}

TEST(TaintBackend, TaintedArgumentToIndexedHelper)
{
    auto idx = load_app("net_transmit");
    auto r = run(idx, "Lcom/fx/net/Uploader;->upload:(Landroid/telephony/TelephonyManager;)V", kPhone);
    ASSERT_EQ(r.next_methods.size(), 1u);
    EXPECT_EQ(r.next_methods[0].str(), "La/pp/Helper;->send:(Ljava/lang/String;)V");
    EXPECT_FALSE(r.leak_here);
    EXPECT_NE(r.summary.find("TAINTED-PARAMS(La/pp/Helper;->send:(Ljava/lang/String;)V):[p0]"), std::string::npos);

    auto callee = run(idx, "La/pp/Helper;->send:(Ljava/lang/String;)V", kPhone, r.summary);
    ASSERT_EQ(callee.sinks.size(), 1u);
    EXPECT_EQ(callee.sinks[0].sink_ref.str(), "Ljava/net/URL;-><init>:(Ljava/lang/String;)V");
    EXPECT_EQ(callee.sinks[0].category, SinkCategory::Transmission);

    // Without the caller's context nothing in send() is sensitive.
    EXPECT_FALSE(run(idx, "La/pp/Helper;->send:(Ljava/lang/String;)V", kPhone).leak_here);
}

// Call site in the style of the moat und/o case: two getLastKnownLocation
// results handed to b(Location, Location).
TEST(TaintBackend, LastKnownLocationPassedToB)
{
    auto idx = index_from(R"(.class Lcom/moat/analytics/mobile/und/o;
.method private static b(Landroid/location/Location;Landroid/location/Location;)Landroid/location/Location;
    .locals 0
    return-object p0
.end method
.method private f()Landroid/location/Location;
    .locals 4
    iget-object v0, p0, Lcom/moat/analytics/mobile/und/o;->c:Landroid/location/LocationManager;
    const-string v3, "gps"
    invoke-virtual {v0, v3}, Landroid/location/LocationManager;->getLastKnownLocation(Ljava/lang/String;)Landroid/location/Location;
    move-result-object v1
    const-string v3, "network"
    invoke-virtual {v0, v3}, Landroid/location/LocationManager;->getLastKnownLocation(Ljava/lang/String;)Landroid/location/Location;
    move-result-object v2
    invoke-static {v1, v2}, Lcom/moat/analytics/mobile/und/o;->b(Landroid/location/Location;Landroid/location/Location;)Landroid/location/Location;
    move-result-object v0
    return-object v0
.end method
)");
    auto r = run(idx, "Lcom/moat/analytics/mobile/und/o;->f:()Landroid/location/Location;", kLastKnown);
    ASSERT_EQ(r.next_methods.size(), 1u);
    EXPECT_EQ(r.next_methods[0].str(),
              "Lcom/moat/analytics/mobile/und/o;->b:(Landroid/location/Location;Landroid/location/Location;)"
              "Landroid/location/Location;");
    EXPECT_NE(r.summary.find("retrieved by calling getLastKnownLocation()"), std::string::npos);
    EXPECT_NE(r.summary.find("passed to b()"), std::string::npos);
    EXPECT_NE(r.summary.find("):[p0,p1]"), std::string::npos) << r.summary;
    EXPECT_FALSE(r.leak_here);
}

TEST(TaintBackend, OverwrittenRegisterIsClean)
{
    auto idx = load_app("overwrite_clean");
    auto r = run(idx, "Lcom/fx/overwrite/Wifi;->show:(Landroid/net/wifi/WifiInfo;)V",
                 api("Landroid/net/wifi/WifiInfo;->getSSID", "SSID"));
    EXPECT_FALSE(r.leak_here);
}

TEST(TaintBackend, FieldAndArithmeticPropagation)
{
    auto idx = load_app("field_flow");
    auto r = run(idx, "Lcom/fx/field/Tracker;->onLocation:(Landroid/location/Location;)V", kLatitude);
    ASSERT_EQ(r.sinks.size(), 1u);
    EXPECT_EQ(r.sinks[0].sink_ref.name, "v");
    EXPECT_NE(r.summary.find("stored in field Lcom/fx/field/Tracker;->lat:D"), std::string::npos);

    auto st = load_app("wifi_static");
    auto s = run(st, "Lcom/fx/wifi/Beacon;->capture:(Landroid/net/wifi/WifiInfo;)V",
                 api("Landroid/net/wifi/WifiInfo;->getBSSID", "BSSID"));
    ASSERT_EQ(s.sinks.size(), 1u);
    EXPECT_EQ(s.sinks[0].category, SinkCategory::Transmission);
}

TEST(TaintBackend, ArraysAndFieldOverwrite)
{
    auto idx = index_from(R"(.class La/R;
.field static s:Ljava/lang/String;
.method static f(Landroid/telephony/TelephonyManager;)V
    .locals 4
    invoke-virtual {p0}, Landroid/telephony/TelephonyManager;->getLine1Number()Ljava/lang/String;
    move-result-object v0
    const/4 v1, 0x1
    new-array v2, v1, [Ljava/lang/String;
    const/4 v1, 0x0
    aput-object v0, v2, v1
    aget-object v3, v2, v1
    sput-object v0, La/R;->s:Ljava/lang/String;
    const-string v0, "clean"
    sput-object v0, La/R;->s:Ljava/lang/String;
    sget-object v1, La/R;->s:Ljava/lang/String;
    invoke-static {v1, v1}, Landroid/util/Log;->e(Ljava/lang/String;Ljava/lang/String;)I
    invoke-static {v3, v3}, Landroid/util/Log;->w(Ljava/lang/String;Ljava/lang/String;)I
    return-void
.end method
)");
    auto r = run(idx, "La/R;->f:(Landroid/telephony/TelephonyManager;)V", kPhone);
    ASSERT_EQ(r.sinks.size(), 1u);
    EXPECT_EQ(r.sinks[0].sink_ref.name, "w");
}

TEST(TaintBackend, SinkTerminationKnob)
{
    auto idx = load_app("factory_methods");
    const std::string on_create = "Lcom/fx/factory/MainActivity;->onCreate:(Landroid/os/Bundle;)V";
    auto stop = run(idx, on_create, kLastKnown);
    EXPECT_TRUE(stop.leak_here);
    EXPECT_TRUE(stop.next_methods.empty());
    auto go = run(idx, on_create, kLastKnown, {}, false);
    EXPECT_TRUE(go.leak_here);
    ASSERT_EQ(go.next_methods.size(), 1u);
    EXPECT_EQ(go.next_methods[0].name, "saveLocation");
}

TEST(TaintedParams, FormatAndParse)
{
    auto callee = parse_method_ref("La/B;->c(II)V");
    auto text = format_tainted_params(callee, {"p0", "p2"});
    EXPECT_EQ(text, "TAINTED-PARAMS(La/B;->c:(II)V):[p0,p2]");
    EXPECT_EQ(parse_tainted_params("Summary.\n" + text, callee), (std::set<std::string>{"p0", "p2"}));
    EXPECT_TRUE(parse_tainted_params(text, parse_method_ref("La/B;->d()V")).empty());
    EXPECT_EQ(parse_tainted_params("free text TAINTED-PARAMS:[p1, v3]", callee), (std::set<std::string>{"p1"}));
    EXPECT_TRUE(parse_tainted_params("TAINTED-PARAMS(broken", callee).empty());
}

TEST(TaintBackendProperty, DeterministicOverCorpus)
{
    for (const auto& app : fs::directory_iterator(fixtures() / "apps")) {
        auto idx = load_smali_tree({app.path()});
        for (const auto& root : find_roots(idx, default_sources())) {
            for (const auto& [sig, rec] : idx.methods()) {
                auto a = run(idx, sig, root.api);
                auto b = run(idx, sig, root.api);
                EXPECT_EQ(a, b) << sig;
                EXPECT_EQ(to_json(a).dump(), to_json(b).dump());
                for (const auto& m : a.next_methods) {
                    EXPECT_TRUE(idx.contains(m));
                    EXPECT_FALSE(is_framework(m));
                }
                if (a.leak_here) {
                    EXPECT_TRUE(a.next_methods.empty());
                }
            }
        }
    }
}
