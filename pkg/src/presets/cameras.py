"""
Camera presets of the datasets whose field of view is unified: focal length and
original frame size in pixels. Every dataset is reduced to the Lyft Level 5 AFOV
(1216 x 352 at f = 880).
"""

# name: (focal_length_px, width_px, height_px)
CAMERAS = {
    "lyft": (880.0, 1224, 1024),
    "presil": (960.0, 1920, 1080),
    "synscapes": (1590.0, 1440, 416),
    "synthia_sf": (847.6, 1920, 1080),
    "virtual_kitti": (725.0, 1242, 375),
    "viper": (1158.0, 1920, 1080),
    "kitti": (721.5, 1242, 375),
}

# Reference view every dataset is cropped to; `lyft` camera seen through this window.
AFOV_REFERENCES = {
    "lyft": (880.0, 1216, 352),
}

TARGET_SIZE = (1216, 352)
FIRST_EXPERIMENT_SIZE = (640, 480)

# Raw-count -> meters factors for 16-bit depth files.
DEPTH_UNITS = {
    "m": 1.0,
    "cm": 0.01,
    "mm": 0.001,
    "1/256m": 1.0 / 256.0,
}
