from hss_migration.models import FileRecord, TierSpec
from hss_migration.storage import Hierarchy


def build_hierarchy(capacities=(1000.0, 100.0, 10.0), speeds=(1.0, 5.0, 10.0)):
    return Hierarchy(
        [
            TierSpec(tier_id=index, capacity=capacity, speed=speed)
            for index, (capacity, speed) in enumerate(zip(capacities, speeds))
        ]
    )


def place(hierarchy, file_id, tier_id, temperature, size):
    record = FileRecord(file_id=file_id, size=size, temperature=temperature, tier_id=tier_id)
    hierarchy.add_file(record)
    return record
