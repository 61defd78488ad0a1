#include "permesh/catalog.hpp"

#include <string>

namespace permesh::catalog {

namespace {

std::string s(std::string_view v) {
    return std::string(v);
}

}  // namespace

void register_natives(PermissionRegistry& registry) {
    registry.register_native_permission(s(kInternet), "full access to the Internet",
                                        "Allows the app to open network sockets to any host.",
                                        ParamSchema{ParamKind::domain_patterns});
    registry.register_native_permission(s(kNetworkState), "network state access",
                                        "Allows the app to see whether the device is connected.");
    registry.register_native_permission(s(kExternalStorage), "modify or delete the contents of the SD card",
                                        "Allows the app to read and write anywhere on the SD card.",
                                        ParamSchema{ParamKind::app_folder});
    registry.register_native_permission(s(kWakeScreen), "unlock the screen",
                                        "Allows the app to turn on and unlock the screen.");
    registry.register_native_permission(s(kRingDevice), "ring the device", "Allows the app to play the ringer.");
    registry.register_native_permission(s(kRecordAudio), "record audio",
                                        "Allows the app to record with the microphone.");
    registry.register_native_permission(s(kBluetooth), "use Bluetooth",
                                        "Allows the app to route audio to paired Bluetooth devices.");

    registry.register_native_api(s(kApiSocketConnect), s(kInternet));
    registry.register_native_api(s(kApiSocketListen), s(kInternet));
    registry.register_native_api(s(kApiNetworkStateRead), s(kNetworkState));
    registry.register_native_api(s(kApiSdcardIo), s(kExternalStorage));
    registry.register_native_api(s(kApiScreenWake), s(kWakeScreen));
    registry.register_native_api(s(kApiRing), s(kRingDevice));
    registry.register_native_api(s(kApiMicCapture), s(kRecordAudio));
    registry.register_native_api(s(kApiBluetoothRoute), s(kBluetooth));
}

std::vector<ProxyDescriptor> standard_proxies() {
    using Mode = Requirement::Mode;
    std::vector<ProxyDescriptor> out;

    ProxyDescriptor net;
    net.id = s(kDomainSelectiveProxy);
    net.kind = ProxyKind::split;
    net.exposes = {s(kDomainSelective), "network access to",
                   "Lets the app talk only to the listed domains.", ParamSchema{ParamKind::domain_patterns}};
    net.requirements = {{s(kInternet), Mode::passthrough, {}}};
    net.api = {s(kApiSelectiveHttp)};
    net.loc_estimate = 480;
    net.provenance = Provenance::builtin;
    out.push_back(net);

    ProxyDescriptor sd;
    sd.id = s(kSelectiveSdcardProxy);
    sd.kind = ProxyKind::split;
    sd.exposes = {s(kSelectiveSdcard), "store files in its own SD card folder",
                  "Confines the app's storage to its own folder.", ParamSchema{ParamKind::app_folder}};
    sd.requirements = {{s(kExternalStorage), Mode::passthrough, {}}};
    sd.api = {s(kApiSelectiveSdcard)};
    sd.loc_estimate = 300;
    sd.provenance = Provenance::builtin;
    out.push_back(sd);

    ProxyDescriptor stats;
    stats.id = s(kUsageStatsProxy);
    stats.kind = ProxyKind::merge;
    stats.exposes = {s(kCollectUsageStats), "collect usage statistics",
                     "Reports anonymous usage events to the analytics service.", std::nullopt};
    stats.requirements = {{s(kDomainSelective), Mode::fixed, {s(kAnalyticsPattern)}},
                          {s(kNetworkState), Mode::unrestricted, {}}};
    stats.api = {s(kApiReportStat)};
    stats.loc_estimate = 250;
    out.push_back(stats);

    ProxyDescriptor phone;
    phone.id = s(kPhoneProxy);
    phone.kind = ProxyKind::merge;
    phone.exposes = {s(kActAsPhone), "act as a phone",
                     "Lets the app ring, take calls, and use the microphone once you answer.", std::nullopt};
    phone.requirements = {{s(kWakeScreen), Mode::unrestricted, {}},
                          {s(kRingDevice), Mode::unrestricted, {}},
                          {s(kRecordAudio), Mode::unrestricted, {}},
                          {s(kBluetooth), Mode::unrestricted, {}}};
    phone.api = {s(kApiPhoneSession), s(kApiPhoneMic), s(kApiPhoneBluetooth)};
    phone.loc_estimate = 400;
    out.push_back(phone);

    return out;
}

void seed(PermissionRegistry& registry, ProxyStore& store) {
    register_natives(registry);
    for (ProxyDescriptor& d : standard_proxies()) {
        store.register_proxy(registry, std::move(d));
    }
}

}  // namespace permesh::catalog
