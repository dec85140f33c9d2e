"""
Semantic palettes of the driving datasets and the common label set they are
merged into. Each row: class name, per-dataset RGB code (None when the dataset
lacks the class), and the common-set class it merges to.
"""

VIPER = "viper"
SYNTHIA_SF = "synthia_sf"
SYNSCAPES = "synscapes"
VIRTUAL_KITTI = "virtual_kitti"
KITTI = "kitti"
COMMON = "common"

DATASET_COLUMNS = (VIPER, SYNTHIA_SF, SYNSCAPES, VIRTUAL_KITTI, KITTI)

# (name, (viper, synthia_sf, synscapes, virtual_kitti, kitti), merges_to)
LABEL_TABLE = [
    ("Fence", ((190, 153, 153), (190, 153, 153), (190, 153, 153), None, (190, 153, 153)), "Unlabeled"),
    ("Guard Rail", (None, None, (180, 165, 180), (250, 100, 255), (180, 165, 180)), "Unlabeled"),
    ("Wall", (None, (102, 102, 156), (102, 102, 156), None, (102, 102, 156)), "Building"),
    ("Parking", (None, None, (250, 170, 160), None, (250, 170, 160)), "Road"),
    ("Rail Track", ((230, 150, 140), None, (230, 150, 140), None, (230, 150, 140)), "Road"),
    ("Road", ((128, 64, 128), (128, 64, 128), (128, 64, 128), (100, 60, 100), (128, 64, 128)), "Road"),
    ("Sidewalk", ((244, 35, 232), (244, 35, 232), (244, 35, 232), None, (244, 35, 232)), "Sidewalk"),
    ("Bridge", (None, None, (150, 100, 100), None, (150, 100, 100)), "Building"),
    ("Building", ((70, 70, 70), (70, 70, 70), (70, 70, 70), (140, 140, 140), (70, 70, 70)), "Building"),
    ("Tunnel", (None, None, (150, 120, 90), None, (150, 120, 90)), "Building"),
    ("Person", ((220, 20, 60), (220, 20, 60), (220, 20, 60), None, (220, 20, 60)), "Person"),
    ("Bicyclist", ((255, 0, 0), (255, 0, 0), (255, 0, 0), None, (255, 0, 0)), "Person"),
    ("Lane Marking - General", (None, (157, 234, 50), None, None, None), "Road"),
    ("Sky", ((70, 130, 180), (70, 130, 180), (70, 130, 180), (90, 200, 255), (70, 130, 180)), "Sky"),
    ("Terrain", ((152, 251, 152), (152, 251, 152), (152, 251, 152), (210, 0, 200), (152, 251, 152)), "Terrain"),
    ("Vegetation", ((35, 142, 35), (107, 142, 35), (107, 142, 35), (90, 240, 0), (107, 142, 35)), "Vegetation"),
    ("Pole", ((153, 153, 153), (153, 153, 153), (153, 153, 153), (255, 130, 0), (153, 153, 153)), "Pole"),
    ("Traffic Light", ((250, 170, 30), (250, 170, 30), (250, 170, 30), (200, 200, 0), (250, 170, 30)), "Pole"),
    ("Traffic Sign (Front)", ((220, 220, 0), (220, 220, 0), (220, 220, 0), (255, 255, 0), (220, 220, 0)), "Pole"),
    ("Trash Can", ((81, 0, 81), None, None, None, None), "Unlabeled"),
    ("Bicycle", ((119, 11, 32), (119, 11, 32), (119, 11, 32), None, (119, 11, 32)), "Bicycle"),
    ("Boat", ((50, 0, 90), None, None, None, None), "Unlabeled"),
    ("Bus", ((0, 60, 100), (0, 60, 100), (0, 60, 100), None, (0, 60, 100)), "Car"),
    ("Car", ((0, 0, 142), (0, 0, 142), (0, 0, 142), (255, 127, 80), (0, 0, 142)), "Car"),
    ("Caravan", ((0, 0, 90), None, (0, 0, 90), None, (0, 0, 90)), "Car"),
    ("Motorcycle", ((0, 0, 230), (0, 0, 230), (0, 0, 230), None, (0, 0, 230)), "Bicycle"),
    ("On Rails", ((0, 80, 100), (0, 80, 100), (0, 80, 100), None, (0, 80, 100)), "Car"),
    ("Trailer", (None, None, (0, 0, 110), None, (0, 0, 110)), "Car"),
    ("Truck", ((0, 0, 70), (0, 0, 70), (0, 0, 70), (160, 60, 60), (0, 0, 70)), "Car"),
    ("Unlabeled", ((0, 0, 0), (0, 0, 0), (0, 0, 0), (0, 0, 0), (0, 0, 0)), "Unlabeled"),
    ("ground", (None, None, (81, 0, 81), None, (81, 0, 81)), "Unlabeled"),
    ("dynamic", ((111, 74, 0), None, (111, 74, 0), None, (111, 74, 0)), "Unlabeled"),
    ("plane", ((0, 100, 100), None, None, None, None), "Unlabeled"),
    ("trash", ((81, 0, 21), None, None, None, None), "Unlabeled"),
    ("chair", ((168, 153, 153), None, None, None, None), "Unlabeled"),
    ("firehydrant", ((173, 153, 153), None, None, None, None), "Unlabeled"),
    ("mobilebarrier", ((180, 180, 100), None, None, None, None), "Unlabeled"),
    ("billboard", ((150, 20, 20), None, None, None, None), "Unlabeled"),
    ("tree", ((87, 182, 35), None, None, (0, 199, 0), None), "Unlabeled"),
    ("Misc", (None, None, None, (80, 80, 80), None), "Unlabeled"),
]

# Common-set codes; channel order of the common registry.
COMMON_SET = [
    ("Unlabeled", (0, 0, 0)),
    ("Road", (128, 64, 128)),
    ("Sidewalk", (244, 35, 232)),
    ("Building", (70, 70, 70)),
    ("Person", (220, 20, 60)),
    ("Sky", (70, 130, 180)),
    ("Terrain", (152, 251, 152)),
    ("Vegetation", (107, 142, 35)),
    ("Pole", (153, 153, 153)),
    ("Bicycle", (119, 11, 32)),
    ("Car", (0, 0, 142)),
]

# Source frames of SYNTHIA-SF carry 19 classes in the depth experiments.
SYNTHIA_SF_CLASS_COUNT = 19
