namespace ssqg {}
