#include "gaitclone/engine.hpp"

namespace gaitclone {

const std::array<int16_t, 257> kSigmoidLut = {
    0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0,
    0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0,
    0, 0, 0, 0, 0, 1, 1, 1, 1, 1, 1, 1,
    1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 2, 2,
    2, 2, 2, 2, 2, 2, 2, 3, 3, 3, 3, 3,
    4, 4, 4, 4, 5, 5, 5, 6, 6, 6, 7, 7,
    8, 8, 8, 9, 10, 10, 11, 11, 12, 13, 14, 15,
    15, 16, 17, 18, 19, 21, 22, 23, 24, 26, 27, 29,
    31, 32, 34, 36, 38, 40, 42, 44, 47, 49, 52, 54,
    57, 60, 63, 66, 69, 72, 75, 79, 82, 86, 89, 93,
    97, 100, 104, 108, 112, 116, 120, 124, 128, 132, 136, 140,
    144, 148, 152, 156, 159, 163, 167, 170, 174, 177, 181, 184,
    187, 190, 193, 196, 199, 202, 204, 207, 209, 212, 214, 216,
    218, 220, 222, 224, 225, 227, 229, 230, 232, 233, 234, 235,
    237, 238, 239, 240, 241, 241, 242, 243, 244, 245, 245, 246,
    246, 247, 248, 248, 248, 249, 249, 250, 250, 250, 251, 251,
    251, 252, 252, 252, 252, 253, 253, 253, 253, 253, 254, 254,
    254, 254, 254, 254, 254, 254, 254, 255, 255, 255, 255, 255,
    255, 255, 255, 255, 255, 255, 255, 255, 255, 255, 255, 255,
    256, 256, 256, 256, 256, 256, 256, 256, 256, 256, 256, 256,
    256, 256, 256, 256, 256, 256, 256, 256, 256, 256, 256, 256,
    256, 256, 256, 256, 256
};

const std::array<int16_t, 257> kTanhLut = {
    -256, -256, -256, -256, -256, -256, -256, -256, -256, -256, -256, -256,
    -256, -256, -256, -256, -256, -256, -256, -256, -256, -256, -256, -256,
    -256, -256, -256, -256, -256, -256, -256, -256, -256, -256, -256, -256,
    -256, -256, -256, -256, -256, -256, -256, -256, -256, -256, -256, -256,
    -256, -256, -256, -256, -256, -256, -256, -256, -256, -256, -256, -256,
    -256, -256, -256, -256, -256, -256, -256, -256, -256, -256, -256, -256,
    -256, -255, -255, -255, -255, -255, -255, -255, -255, -255, -254, -254,
    -254, -254, -253, -253, -253, -252, -252, -251, -250, -250, -249, -248,
    -247, -246, -244, -243, -241, -239, -237, -234, -232, -229, -225, -221,
    -217, -212, -207, -201, -195, -188, -180, -172, -163, -153, -142, -131,
    -118, -105, -92, -77, -63, -47, -32, -16, 0, 16, 32, 47,
    63, 77, 92, 105, 118, 131, 142, 153, 163, 172, 180, 188,
    195, 201, 207, 212, 217, 221, 225, 229, 232, 234, 237, 239,
    241, 243, 244, 246, 247, 248, 249, 250, 250, 251, 252, 252,
    253, 253, 253, 254, 254, 254, 254, 255, 255, 255, 255, 255,
    255, 255, 255, 255, 256, 256, 256, 256, 256, 256, 256, 256,
    256, 256, 256, 256, 256, 256, 256, 256, 256, 256, 256, 256,
    256, 256, 256, 256, 256, 256, 256, 256, 256, 256, 256, 256,
    256, 256, 256, 256, 256, 256, 256, 256, 256, 256, 256, 256,
    256, 256, 256, 256, 256, 256, 256, 256, 256, 256, 256, 256,
    256, 256, 256, 256, 256, 256, 256, 256, 256, 256, 256, 256,
    256, 256, 256, 256, 256
};

// spot checks: sig[128]=128 (x=0 -> 128), tanh[128]=0, sig[256]=256, tanh[256]=256

}  // namespace gaitclone
