#pragma once

#include <string_view>
#include <vector>

#include "permesh/capability.hpp"
#include "permesh/proxy.hpp"

// Standard native permissions, their OS-level APIs, and the four stock
// proxies (two split, two merge).
namespace permesh::catalog {

inline constexpr std::string_view kInternet = "android.permission.INTERNET";
inline constexpr std::string_view kNetworkState = "android.permission.ACCESS_NETWORK_STATE";
inline constexpr std::string_view kExternalStorage = "android.permission.WRITE_EXTERNAL_STORAGE";
inline constexpr std::string_view kWakeScreen = "android.permission.WAKE_SCREEN";
inline constexpr std::string_view kRingDevice = "android.permission.RING_DEVICE";
inline constexpr std::string_view kRecordAudio = "android.permission.RECORD_AUDIO";
inline constexpr std::string_view kBluetooth = "android.permission.BLUETOOTH";

inline constexpr std::string_view kDomainSelective = "org.permesh.permission.DOMAIN_SELECTIVE_INTERNET";
inline constexpr std::string_view kSelectiveSdcard = "org.permesh.permission.SELECTIVE_SDCARD";
inline constexpr std::string_view kCollectUsageStats = "org.permesh.permission.COLLECT_USAGE_STATISTICS";
inline constexpr std::string_view kActAsPhone = "org.permesh.permission.ACT_AS_A_PHONE";

inline constexpr std::string_view kDomainSelectiveProxy = "org.permesh.proxy.domainselective";
inline constexpr std::string_view kSelectiveSdcardProxy = "org.permesh.proxy.selectivesdcard";
inline constexpr std::string_view kUsageStatsProxy = "org.permesh.proxy.usagestats";
inline constexpr std::string_view kPhoneProxy = "org.permesh.proxy.phone";

// Native API operation ids.
inline constexpr std::string_view kApiSocketConnect = "net.socket.connect";
inline constexpr std::string_view kApiSocketListen = "net.socket.listen";
inline constexpr std::string_view kApiNetworkStateRead = "net.state.read";
inline constexpr std::string_view kApiSdcardIo = "storage.sdcard.io";
inline constexpr std::string_view kApiScreenWake = "device.screen.wake";
inline constexpr std::string_view kApiRing = "device.ringer.ring";
inline constexpr std::string_view kApiMicCapture = "media.mic.capture";
inline constexpr std::string_view kApiBluetoothRoute = "bluetooth.audio.route";

// Proxy API operation ids.
inline constexpr std::string_view kApiSelectiveHttp = "proxy.net.selective_http";
inline constexpr std::string_view kApiSelectiveSdcard = "proxy.sdcard.io";
inline constexpr std::string_view kApiReportStat = "proxy.stats.report";
inline constexpr std::string_view kApiPhoneSession = "proxy.phone.session";
inline constexpr std::string_view kApiPhoneMic = "proxy.phone.mic";
inline constexpr std::string_view kApiPhoneBluetooth = "proxy.phone.bluetooth";

inline constexpr std::string_view kAnalyticsPattern = "*.google-analytics.com";
inline constexpr std::string_view kAnalyticsHost = "ssl.google-analytics.com";

void register_natives(PermissionRegistry& registry);
std::vector<ProxyDescriptor> standard_proxies();
// Natives plus every standard proxy published to the store.
void seed(PermissionRegistry& registry, ProxyStore& store);

}  // namespace permesh::catalog
